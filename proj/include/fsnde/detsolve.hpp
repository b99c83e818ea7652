#pragma once

// Deterministic mild solution of the neutral fractional DDE via the
// representation formula:
//
//   y(t) = E_{l,1}(t) (phi(0) - A2 phi(-h2))
//        + int_{-h1}^0 E_{l,l}(t - h1 - s) A1 phi(s) ds
//        + int_{-h2}^0 E_{l,0}(t - h2 - s) A2 phi(s) ds
//        + int_0^t   E_{l,l}(t - s) f(s, y(s), y(s-h1), y(s-h2)) ds
//
// The E_{l,0} kernel is a measure: its k = 0 layer is sum_m A2^m delta(. - m h2).
// The atom inside the history window contributes A2^{floor(t/h2)+1} phi(s*)
// with s* = (t mod h2) - h2; that term is what keeps y continuous at t = 0
// and reproduces y = const for the pure neutral system.
//
// All kernel convolutions integrate the power singularities exactly per
// series term (product quadrature); the smooth factor is the piecewise-linear
// interpolant of its grid values.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "delayed_ml.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "specfun.hpp"
#include "system.hpp"

namespace fsnde {

// Discrete version of the weighted maximum norm (running max over [-h, t],
// p-th power, divided by E_{p l - p + 1}(gamma t^{p l - p + 1})).
struct WeightedNorm {
  double p = 1.0;
  double gamma = 1.0;
  double lambda = 0.5;

  double alpha() const { return p * lambda - p + 1.0; }

  std::vector<double> denominators(const Grid& grid) const {
    const double a = alpha();
    if (!(a > 0.0)) throw DomainError("WeightedNorm: need lambda > (p-1)/p");
    std::vector<double> den(grid.n_steps + 1);
    TruncationPolicy pol;
    pol.max_terms = 200000;
    for (int i = 0; i <= grid.n_steps; ++i)
      den[i] = ml_eval({a, 1.0}, gamma * std::pow(grid.t(i), a), pol);
    return den;
  }

  // distance between two trajectories sharing a grid (history nodes equal)
  double distance(const Trajectory& y, const Trajectory& z,
                  const std::vector<double>& den) const {
    double run = 0.0, best = 0.0;
    const int n0 = y.index_of_time0();
    for (int i = n0; i < y.nodes(); ++i) {
      run = std::max(run, norm2(y.values[i] - z.values[i]));
      best = std::max(best, std::pow(run, p) / den[i - n0]);
    }
    return best;
  }
};

struct PicardReport {
  int iterations = 0;
  std::vector<double> distances;  // successive-iterate weighted distances
  std::vector<double> ratios;     // contraction-rate diagnostics
};

namespace detail {

// panel edges and values of s -> coeff * phi(map_back(u)) on [u_lo, u_hi],
// aligned with phi's grid; exact for the tabulated piecewise-linear phi.
inline void history_panels(const HistoryFn& phi, const Matrix& coeff, double t, double hdelay,
                           std::vector<double>& edges, std::vector<Vec>& vals) {
  edges.clear();
  vals.clear();
  const double u_lo = std::max(0.0, t - hdelay);
  const double u_hi = t;
  if (!(u_hi > u_lo)) return;
  // u = t - hdelay - s maps phi nodes s_j = -h + j*step to u nodes
  edges.push_back(u_lo);
  for (int j = phi.panels(); j >= 0; --j) {
    const double s = -phi.h + j * phi.step;
    const double u = t - hdelay - s;
    if (u > u_lo + 1e-12 * (1.0 + u_hi) && u < u_hi - 1e-12 * (1.0 + u_hi)) edges.push_back(u);
  }
  edges.push_back(u_hi);
  vals.reserve(edges.size());
  for (double u : edges) vals.push_back(coeff * phi.eval(t - hdelay - u));
}

}  // namespace detail

// History terms of the representation at time t (everything except the
// nonlinear convolution).
inline Vec history_integrals(DmlSeries& E, const HistoryFn& phi, double t,
                             const TruncationPolicy& pol = {}) {
  const MatrixTriple& m = E.mats();
  const DelayPair& d = E.delays();
  const double lam = E.lambda();
  if (t < 0.0) throw DomainError("history_integrals: t must be >= 0");

  Vec phi0 = phi.eval(0.0);
  Vec phim = m.a2 * phi.eval(-d.h2);
  Vec out = E.eval(1.0, t, pol) * (phi0 - phim);

  std::vector<double> edges;
  std::vector<Vec> vals;
  detail::history_panels(phi, m.a1, t, d.h1, edges, vals);
  if (edges.size() >= 2) out = out + E.integral_against_plin(lam, edges, vals, pol);

  detail::history_panels(phi, m.a2, t, d.h2, edges, vals);
  if (edges.size() >= 2) out = out + E.integral_against_plin(0.0, edges, vals, pol);

  // atom of the nu = 0 kernel inside the history window
  const int m2 = static_cast<int>(std::floor(t / d.h2 + 1e-9));
  const double s_star = t - (m2 + 1) * d.h2;
  if (s_star >= -d.h2 - 1e-12) {
    Vec av = m.a2 * phi.eval(s_star);
    Vec contrib = E.q(1, 0, m2) * av;  // Q_1(0, m2) = A2^m2
    out = out + contrib;
  }
  return out;
}

// Product-trapezoid weights for the drift convolution on a uniform grid:
// conv(t_i) = sum_{d=1..i} [ Wl_d f_{i-d} + Wr_d f_{i-d+1} ] where
//   Wl_d = (1/dt) int_{(d-1)dt}^{d dt} E(u) (d dt - u) du
//   Wr_d = (1/dt) int_{(d-1)dt}^{d dt} E(u) (u - (d-1) dt) du
struct DriftWeights {
  std::vector<Matrix> wl, wr;  // index d-1

  static DriftWeights build(DmlSeries& E, const Grid& grid, const TruncationPolicy& pol = {}) {
    DriftWeights w;
    w.wl.reserve(grid.n_steps);
    w.wr.reserve(grid.n_steps);
    for (int d = 1; d <= grid.n_steps; ++d) {
      const double a = (d - 1) * grid.dt, b = d * grid.dt;
      Matrix v = E.integral(E.lambda(), a, b, pol);
      Matrix m1 = E.integral_moment1(E.lambda(), a, b, pol);
      w.wr.push_back(m1 * (1.0 / grid.dt));
      w.wl.push_back((v * grid.dt - m1) * (1.0 / grid.dt));
    }
    return w;
  }
};

// Picard iteration for the nonlinear representation. Returns the trajectory
// on [-h, T] (history nodes first). Initial guess: y(t) = phi(0) for t > 0.
inline Trajectory picard_solve(DmlSeries& E, const HistoryFn& phi, const CoefficientFn& f,
                               const Grid& grid, double tol, int max_iter,
                               const WeightedNorm& norm, PicardReport* report = nullptr,
                               const TruncationPolicy& pol = {}) {
  const DelayPair& d = E.delays();
  const int n = E.dim();
  const int hn = grid.delay_steps(d.h());
  const int h1n = grid.delay_steps(d.h1);
  const int h2n = grid.delay_steps(d.h2);
  const int N = grid.n_steps;

  Trajectory traj;
  traj.dt = grid.dt;
  traj.history_nodes = hn;
  traj.values.assign(hn + N + 1, Vec(n, 0.0));
  for (int i = 0; i <= hn; ++i) traj.values[i] = phi.eval(-d.h() + i * grid.dt);
  const Vec y0 = phi.eval(0.0);
  for (int i = 1; i <= N; ++i) traj.values[hn + i] = y0;

  std::vector<Vec> hist(N + 1, Vec(n, 0.0));
  for (int i = 0; i <= N; ++i) hist[i] = history_integrals(E, phi, grid.t(i), pol);

  const DriftWeights w = DriftWeights::build(E, grid, pol);
  const std::vector<double> den = norm.denominators(grid);

  auto f_at = [&](const Trajectory& y, int i) {
    return f.f(grid.t(i), y.at_step(i), y.at_step(i - h1n), y.at_step(i - h2n));
  };

  Trajectory next = traj;
  double prev_dist = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<Vec> fv(N + 1);
    for (int i = 0; i <= N; ++i) fv[i] = f_at(traj, i);
    for (int i = 1; i <= N; ++i) {
      Vec acc = hist[i];
      for (int dd = 1; dd <= i; ++dd) {
        Vec a = w.wl[dd - 1] * fv[i - dd];
        Vec b = w.wr[dd - 1] * fv[i - dd + 1];
        axpy(acc, 1.0, a);
        axpy(acc, 1.0, b);
      }
      next.values[hn + i] = acc;
    }
    next.values[hn] = traj.values[hn];
    const double dist = norm.distance(next, traj, den);
    if (report) {
      report->iterations = it + 1;
      report->distances.push_back(dist);
      if (prev_dist > 0.0) report->ratios.push_back(dist / prev_dist);
    }
    std::swap(traj.values, next.values);
    if (dist <= tol) return traj;
    prev_dist = dist;
  }
  std::string ratio_info = "n/a";
  if (report && !report->ratios.empty()) ratio_info = std::to_string(report->ratios.back());
  throw NoConvergence("picard_solve: no fixed point within max_iter (last contraction ratio " +
                      ratio_info + ")");
}

// L1-scheme diagnostic: the max over grid points of the defect between the
// discrete Caputo derivative and the right-hand side of the equation (noise
// absent). The delayed derivative term is the L1 value at the shifted node
// (zero before t = 0). Nodes in the initial layer are skipped: the L1 stencil
// has an O(1) defect at the first nodes for solutions with the generic t^l
// start, so "interior" begins at skip_fraction * T.
inline double caputo_residual(const Trajectory& traj, const SystemSpec& sys,
                              const CoefficientFn& f, const Grid& grid,
                              double skip_fraction = 0.25) {
  const int N = grid.n_steps;
  const int hn = traj.history_nodes;
  const int h1n = grid.delay_steps(sys.delays.h1);
  const int h2n = grid.delay_steps(sys.delays.h2);
  const double lam = sys.lambda;
  const double c0 = std::pow(grid.dt, -lam) * recip_gamma(2.0 - lam);

  // L1 weights a_m = (m+1)^{1-l} - m^{1-l}
  std::vector<double> a(N);
  for (int m = 0; m < N; ++m)
    a[m] = std::pow(m + 1.0, 1.0 - lam) - std::pow(static_cast<double>(m), 1.0 - lam);

  std::vector<Vec> dcap(N + 1, Vec(sys.dim(), 0.0));
  for (int i = 1; i <= N; ++i) {
    Vec acc(sys.dim(), 0.0);
    for (int j = 0; j < i; ++j) {
      const Vec diff = traj.values[hn + j + 1] - traj.values[hn + j];
      axpy(acc, a[i - j - 1], diff);
    }
    dcap[i] = c0 * acc;
  }

  double worst = 0.0;
  const int i_lo = std::max(1, static_cast<int>(std::ceil(skip_fraction * N)));
  for (int i = i_lo; i <= N; ++i) {
    Vec rhs = sys.mats.a0 * traj.at_step(i);
    rhs = rhs + sys.mats.a1 * traj.at_step(i - h1n);
    if (i - h2n >= 1) rhs = rhs + sys.mats.a2 * dcap[i - h2n];
    Vec fval = f.f(grid.t(i), traj.at_step(i), traj.at_step(i - h1n), traj.at_step(i - h2n));
    rhs = rhs + fval;
    worst = std::max(worst, norm2(dcap[i] - rhs));
  }
  return worst;
}

}  // namespace fsnde
