#pragma once

// Adaptive Gauss-Kronrod 15(7) quadrature, plus a log-domain variant for
// positive integrands whose values overflow double range.

#include <cmath>
#include <functional>
#include <limits>

#include "errors.hpp"
#include "logsum.hpp"

namespace fsnde {

namespace gk {
// Kronrod-15 nodes on [-1,1] and weights; the embedded Gauss-7 rule uses the
// odd-indexed nodes. Values from the usual QUADPACK tables.
inline constexpr double xk[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
inline constexpr double wk[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr double wg[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};
}  // namespace gk

// Adaptive GK15 to relative tolerance; absolute floor guards the zero case.
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double rel_tol = 1e-9, double abs_tol = 1e-300,
                                 int max_depth = 48) {
  std::function<double(double, double, int)> rec = [&](double lo, double hi,
                                                       int depth) -> double {
    const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    double sk = 0.0, sg = 0.0;
    double fv[15];
    for (int i = 0; i < 15; ++i) {
      fv[i] = f(c + hw * gk::xk[i]);
      sk += gk::wk[i] * fv[i];
    }
    for (int i = 0; i < 7; ++i) sg += gk::wg[i] * fv[2 * i + 1];
    sk *= hw;
    sg *= hw;
    const double err = std::fabs(sk - sg);
    if (err <= std::max(rel_tol * std::fabs(sk), abs_tol) || depth >= max_depth) return sk;
    return rec(lo, c, depth + 1) + rec(c, hi, depth + 1);
  };
  if (!(b > a)) return 0.0;
  return rec(a, b, 0);
}

// Adaptive GK15 of exp(lf(x)) for lf given in log space; returns the log of
// the integral. Requires a genuinely positive integrand (Kronrod weights are
// positive, so the log-sum is well-defined).
inline double integrate_adaptive_log(const std::function<double(double)>& lf, double a, double b,
                                     double rel_tol = 1e-9, int max_depth = 48) {
  std::function<double(double, double, int)> rec = [&](double lo, double hi,
                                                       int depth) -> double {
    const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    const double lhw = std::log(hw);
    double lv[15];
    LogAccumulator ak, ag;
    for (int i = 0; i < 15; ++i) {
      lv[i] = lf(c + hw * gk::xk[i]);
      ak.push(std::log(gk::wk[i]) + lv[i]);
    }
    for (int i = 0; i < 7; ++i) ag.push(std::log(gk::wg[i]) + lv[2 * i + 1]);
    const double lsk = ak.value() + lhw;
    const double lsg = ag.value() + lhw;
    const double rel_err = std::fabs(std::expm1(lsg - lsk));
    if (rel_err <= rel_tol || depth >= max_depth) return lsk;
    return log_add(rec(lo, c, depth + 1), rec(c, hi, depth + 1));
  };
  if (!(b > a)) return kNegInf;
  return rec(a, b, 0);
}

}  // namespace fsnde
