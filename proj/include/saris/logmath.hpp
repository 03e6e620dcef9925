#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace saris {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; either argument may be -inf.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

/// log of a sum of exponentials. Empty input gives -inf.
inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf || !std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

/// A real number held as sign * exp(log_abs). sign == 0 means exactly zero.
struct SignedLog {
  double log_abs = kNegInf;
  int sign = 0;
};

/// exp(a) - exp(b) in signed log form.
inline SignedLog log_diff(double a, double b) {
  if (a == b) return {kNegInf, 0};
  if (a > b) {
    if (b == kNegInf) return {a, +1};
    return {a + std::log(-std::expm1(b - a)), +1};
  }
  if (a == kNegInf) return {b, -1};
  return {b + std::log(-std::expm1(a - b)), -1};
}

/// Streaming log-sum-exp accumulator (single pass, rescales on a new max).
class LogSumAccumulator {
 public:
  void add(double x) {
    if (x == kNegInf) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

inline double log_normal_pdf(double x, double mean, double var) {
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

}  // namespace saris
