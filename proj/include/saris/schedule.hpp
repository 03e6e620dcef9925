#pragma once

#include <cstdint>

namespace saris {

/// Robbins-Monro gains: heat_value while k < k_heat, a / (b + k^epsilon) after.
struct StepSchedule {
  double a = 0.1;
  double b = 1.0;
  double epsilon = 2.0 / 3.0;
  std::int64_t k_heat = 300;
  double heat_value = 0.1;

  /// 0.1 for k < 300, 0.1 / (1 + k^(2/3)) afterwards.
  static StepSchedule heated_default() { return {}; }
  static StepSchedule polynomial(double a, double b, double epsilon) {
    return {a, b, epsilon, 0, a};
  }
  /// Constant gain (the joint procedure runs with 0.1).
  static StepSchedule constant(double value) { return {value, 1.0, 1.0, INT64_MAX, value}; }

  /// Throws std::invalid_argument on a malformed schedule.
  void validate() const;
};

/// gamma_k. Throws std::domain_error when b + k^epsilon is zero (b = 0, k = 0).
double gamma(const StepSchedule& schedule, std::int64_t k);

}  // namespace saris
