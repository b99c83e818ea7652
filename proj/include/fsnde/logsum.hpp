#pragma once

// Log-domain accumulation of positive series. The delayed Mittag-Leffler
// majorants reach magnitudes far beyond double range for the matrix norms
// that show up in practice, so the scalar side of the library works in
// natural-log space and converts back only when the linear value fits.

#include <cmath>
#include <limits>

namespace fsnde {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Running log-sum-exp: after pushing ln(x_i), value() returns ln(sum x_i).
class LogAccumulator {
 public:
  void push(double ln_term) {
    if (ln_term == kNegInf) return;
    if (max_ == kNegInf) {
      max_ = ln_term;
      sum_ = 1.0;
      return;
    }
    if (ln_term <= max_) {
      sum_ += std::exp(ln_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - ln_term) + 1.0;
      max_ = ln_term;
    }
  }
  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }
  bool empty() const { return max_ == kNegInf; }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

inline double log_add(double la, double lb) {
  if (la == kNegInf) return lb;
  if (lb == kNegInf) return la;
  if (la < lb) std::swap(la, lb);
  return la + std::log1p(std::exp(lb - la));
}

// exp() that saturates to +inf / 0 instead of raising.
inline double exp_or_inf(double lx) {
  if (lx > 709.0) return std::numeric_limits<double>::infinity();
  return std::exp(lx);
}

}  // namespace fsnde
