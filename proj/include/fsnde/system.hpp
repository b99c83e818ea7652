#pragma once

// Problem-instance types shared by the deterministic and stochastic solvers.

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "delayed_ml.hpp"
#include "errors.hpp"
#include "matrix.hpp"

namespace fsnde {

// Full instance of the neutral equation: matrices, delays, order, horizon,
// plus human-readable descriptors of the chosen coefficients (for manifests).
struct SystemSpec {
  MatrixTriple mats;
  DelayPair delays;
  double lambda = 0.5;
  double horizon = 1.0;
  std::string f_desc = "zero";
  std::string sigma_desc = "zero";

  int dim() const { return mats.dim; }
};

// History phi on [-h, 0], tabulated on a uniform grid, linear interpolation.
struct HistoryFn {
  double h = 0.0;                  // covers exactly [-h, 0]
  double step = 0.0;
  std::vector<Vec> values;         // values[j] = phi(-h + j*step)

  static HistoryFn tabulate(double h, int panels,
                            const std::function<Vec(double)>& phi) {
    if (!(h > 0.0) || panels < 1) throw DomainError("HistoryFn: h > 0 and panels >= 1 required");
    HistoryFn f;
    f.h = h;
    f.step = h / panels;
    f.values.reserve(panels + 1);
    for (int j = 0; j <= panels; ++j) {
      const double s = -h + j * f.step;
      Vec v = phi(std::min(s, 0.0));
      for (double x : v)
        if (!std::isfinite(x)) throw DomainError("HistoryFn: history values must be finite");
      f.values.push_back(std::move(v));
    }
    return f;
  }

  static HistoryFn zero(double h, int dim, int panels = 4) {
    return tabulate(h, panels, [dim](double) { return Vec(dim, 0.0); });
  }

  int dim() const { return values.empty() ? 0 : static_cast<int>(values[0].size()); }
  int panels() const { return static_cast<int>(values.size()) - 1; }

  Vec eval(double s) const {
    if (s <= -h) return values.front();
    if (s >= 0.0) return values.back();
    const double x = (s + h) / step;
    const int j = std::min(static_cast<int>(std::floor(x)), panels() - 1);
    const double w = x - j;
    Vec v(values[j].size());
    for (size_t c = 0; c < v.size(); ++c)
      v[c] = (1.0 - w) * values[j][c] + w * values[j + 1][c];
    return v;
  }

  HistoryFn scaled(double factor) const {
    HistoryFn f = *this;
    for (auto& v : f.values)
      for (double& x : v) x *= factor;
    return f;
  }
};

// Drift coefficient f(t, y, y_h1, y_h2) with its declared (A1) Lipschitz
// constant (p-th power form) and (A4) linear-growth constant.
struct CoefficientFn {
  std::function<Vec(double, const Vec&, const Vec&, const Vec&)> f;
  double lipschitz = 0.0;
  double growth = 0.0;

  static CoefficientFn zero(int dim) {
    return {[dim](double, const Vec&, const Vec&, const Vec&) { return Vec(dim, 0.0); },
            0.0, 0.0};
  }
};

// Noise coefficient sigma(t, y, y_h1, y_h2) -> n x q matrix.
struct NoiseFn {
  std::function<Matrix(double, const Vec&, const Vec&, const Vec&)> sigma;
  int q = 1;
  double lipschitz = 0.0;
  double growth = 0.0;

  static NoiseFn zero(int dim, int q = 1) {
    return {[dim, q](double, const Vec&, const Vec&, const Vec&) { return Matrix::zeros(dim, q); },
            q, 0.0, 0.0};
  }
};

// Uniform time grid t_i = i*dt, i = 0..n_steps. Delays must be integer
// multiples of dt: the solvers index delayed states directly instead of
// interpolating them, so non-commensurate steps are rejected with a usable
// alternative in the message.
struct Grid {
  double dt = 0.0;
  int n_steps = 0;

  Grid() = default;
  Grid(double horizon, double step, const DelayPair& d) : dt(step) {
    if (!(step > 0.0) || !(horizon > 0.0))
      throw DomainError("Grid: horizon and step must be positive");
    const double ratio = horizon / step;
    n_steps = static_cast<int>(std::llround(ratio));
    if (n_steps < 1 || std::fabs(ratio - n_steps) > 1e-9 * std::max(1.0, ratio))
      throw DomainError("Grid: horizon must be an integer multiple of dt");
    check_commensurate(d.h1, step, "h1");
    check_commensurate(d.h2, step, "h2");
  }

  double horizon() const { return n_steps * dt; }
  double t(int i) const { return i * dt; }

  int delay_steps(double h) const { return static_cast<int>(std::llround(h / dt)); }

 private:
  static void check_commensurate(double h, double step, const char* name) {
    const double r = h / step;
    const double rounded = std::llround(r);
    if (rounded < 1 || std::fabs(r - rounded) > 1e-9 * std::max(1.0, r)) {
      const double suggestion = h / std::max(1.0, std::ceil(r));
      throw DomainError(std::string("Grid: delay ") + name +
                        " is not an integer multiple of dt; nearest commensurate step: " +
                        std::to_string(suggestion));
    }
  }
};

// Trajectory on [-h, T]: node i holds y(-h + i*dt); history occupies the
// first h/dt nodes, t = 0 sits at index history_nodes.
struct Trajectory {
  double dt = 0.0;
  int history_nodes = 0;
  std::vector<Vec> values;

  double t(int i) const { return (i - history_nodes) * dt; }
  int nodes() const { return static_cast<int>(values.size()); }
  int index_of_time0() const { return history_nodes; }
  const Vec& at_step(int i) const { return values[history_nodes + i]; }  // i may be negative
};

}  // namespace fsnde
