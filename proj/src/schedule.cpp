#include "saris/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace saris {

void StepSchedule::validate() const {
  if (!(a > 0.0)) throw std::invalid_argument("step schedule: a must be positive");
  if (!(b >= 0.0)) throw std::invalid_argument("step schedule: b must be nonnegative");
  if (!(epsilon > 0.5 && epsilon <= 1.0))
    throw std::invalid_argument("step schedule: epsilon must lie in (1/2, 1]");
  if (k_heat < 0) throw std::invalid_argument("step schedule: k_heat must be nonnegative");
  if (k_heat > 0 && !(heat_value > 0.0))
    throw std::invalid_argument("step schedule: heat_value must be positive");
}

double gamma(const StepSchedule& s, std::int64_t k) {
  if (k < 0) throw std::domain_error("gamma: negative index");
  if (k < s.k_heat) return s.heat_value;
  const double denom = s.b + std::pow(static_cast<double>(k), s.epsilon);
  if (!(denom > 0.0)) throw std::domain_error("gamma: b + k^epsilon is zero");
  return s.a / denom;
}

}  // namespace saris
