#include "saris/mc.hpp"

#include <cmath>
#include <string>

#include "saris/logmath.hpp"

namespace saris {

namespace {

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double log_total_weight(const std::vector<EvaluatedDraw>& draws) {
  LogSumAccumulator acc;
  for (const auto& d : draws) acc.add(d.log_weight);
  return acc.value();
}

void require_nonempty(const std::vector<EvaluatedDraw>& draws, const char* what) {
  if (draws.empty()) throw std::invalid_argument(std::string(what) + ": empty draw list");
}

// log f0 - log r - log f1; NaN when both densities vanish (such draws carry no information).
double log_odds(const EvaluatedDraw& d, double log_r) { return d.log_f0 - log_r - d.log_f1; }

// One application of the fixed-point map, in log r.
double bridge_map(const SampleBank& bank, double log_r, double log_w0, double log_w1) {
  LogSumAccumulator a, b;
  for (const auto& d : bank.draws1) {
    const double x = log_odds(d, log_r);
    if (!std::isnan(x)) a.add(d.log_weight + log_sigmoid(x));
  }
  for (const auto& d : bank.draws0) {
    const double x = log_odds(d, log_r);
    if (!std::isnan(x)) b.add(d.log_weight + log_sigmoid(-x));
  }
  return log_r + (a.value() - log_w1) - (b.value() - log_w0);
}

double score_scale(const SampleBank& bank) {
  return 0.5 * static_cast<double>(bank.draws0.size() + bank.draws1.size());
}

}  // namespace

std::vector<EvaluatedDraw> evaluate_draws(const RatioProblem& problem,
                                          const std::vector<Point>& points) {
  std::vector<EvaluatedDraw> out;
  out.reserve(points.size());
  for (const auto& z : points) out.push_back({z, problem.f0()(z), problem.f1()(z), 0.0});
  return out;
}

SampleBank SampleBank::from_draws(const RatioProblem& problem, const std::vector<Point>& draws0,
                                  const std::vector<Point>& draws1,
                                  const std::vector<Point>& draws_pi) {
  return {evaluate_draws(problem, draws0), evaluate_draws(problem, draws1),
          evaluate_draws(problem, draws_pi)};
}

SampleBank SampleBank::enumeration(const RatioProblem& problem, const LogDensity* pi) {
  const auto support = discrete_support(problem);
  if (support.empty()) throw std::invalid_argument("SampleBank::enumeration: not a discrete fixture");
  SampleBank bank;
  bank.draws0 = evaluate_draws(problem, support);
  bank.draws1 = bank.draws0;
  LogSumAccumulator c0, c1;
  for (const auto& d : bank.draws0) {
    c0.add(d.log_f0);
    c1.add(d.log_f1);
  }
  for (auto& d : bank.draws0) d.log_weight = d.log_f0 - c0.value();
  for (auto& d : bank.draws1) d.log_weight = d.log_f1 - c1.value();
  if (pi) {
    bank.draws_pi = evaluate_draws(problem, support);
    for (auto& d : bank.draws_pi) d.log_weight = (*pi)(d.z);
  }
  return bank;
}

bool SampleBank::verify(const RatioProblem& problem) const {
  for (const auto* list : {&draws0, &draws1, &draws_pi}) {
    for (const auto& d : *list) {
      if (problem.f0()(d.z) != d.log_f0 || problem.f1()(d.z) != d.log_f1) return false;
    }
  }
  return true;
}

double RatioEstimate::ratio() const { return std::exp(log_ratio); }
double BridgeResult::ratio() const { return std::exp(log_ratio); }

RatioEstimate bridge_estimate(const SampleBank& bank,
                              const std::function<double(const Point&)>& log_alpha) {
  require_nonempty(bank.draws0, "bridge_estimate");
  require_nonempty(bank.draws1, "bridge_estimate");
  LogSumAccumulator num, den;
  for (const auto& d : bank.draws1) num.add(d.log_weight + d.log_f0 + log_alpha(d.z));
  for (const auto& d : bank.draws0) den.add(d.log_weight + d.log_f1 + log_alpha(d.z));
  const double log_num = num.value() - log_total_weight(bank.draws1);
  const double log_den = den.value() - log_total_weight(bank.draws0);
  if (log_den == kNegInf || std::isnan(log_den))
    throw EstimationError("bridge_estimate: denominator is zero");
  const double out = log_num - log_den;
  if (std::isnan(out)) throw EstimationError("bridge_estimate: undefined ratio");
  return {out};
}

double bridge_score(const SampleBank& bank, double log_r) {
  double a = 0.0, b = 0.0;
  for (const auto& d : bank.draws1) {
    const double x = log_odds(d, log_r);
    if (!std::isnan(x)) a += std::exp(d.log_weight) * sigmoid(x);
  }
  for (const auto& d : bank.draws0) {
    const double x = log_odds(d, log_r);
    if (!std::isnan(x)) b += std::exp(d.log_weight) * sigmoid(-x);
  }
  const double w1 = std::exp(log_total_weight(bank.draws1));
  const double w0 = std::exp(log_total_weight(bank.draws0));
  return score_scale(bank) * (a / w1 - b / w0);
}

BridgeResult bridge_optimal(const SampleBank& bank, const BridgeOptions& options) {
  require_nonempty(bank.draws0, "bridge_optimal");
  require_nonempty(bank.draws1, "bridge_optimal");
  if (!(options.r_init > 0.0)) throw std::invalid_argument("bridge_optimal: r_init must be positive");
  if (!(options.tol > 0.0) || options.max_iter < 1)
    throw std::invalid_argument("bridge_optimal: bad tolerance or iteration cap");

  const double log_w0 = log_total_weight(bank.draws0);
  const double log_w1 = log_total_weight(bank.draws1);
  const double log_tol = std::log1p(options.tol);

  BridgeResult result;
  double x = std::log(options.r_init);
  double prev_step = 0.0;
  bool converged = false;
  const int fixed_point_cap = std::max(1, options.max_iter / 2);
  while (result.iterations < fixed_point_cap) {
    const double next = bridge_map(bank, x, log_w0, log_w1);
    ++result.iterations;
    if (!std::isfinite(next)) throw EstimationError("bridge_optimal: map left the positive reals", x);
    const double step = next - x;
    x = next;
    if (std::abs(step) <= log_tol) {
      converged = true;
      break;
    }
    if (result.iterations > 1 && step * prev_step < 0.0 && std::abs(step) > 0.5 * std::abs(prev_step))
      break;
    prev_step = step;
  }

  if (!converged) {
    result.used_bracketing = true;
    // Score decreases in log r: bracket the sign change around x, then bisect.
    double lo = x, hi = x;
    double s = bridge_score(bank, x);
    double width = 1.0;
    if (s > 0.0) {
      while (bridge_score(bank, hi) > 0.0) {
        lo = hi;
        hi = x + width;
        width *= 2.0;
        if (++result.iterations >= options.max_iter || hi > 700.0)
          throw EstimationError("bridge_optimal: no root above the current iterate", x);
      }
    } else if (s < 0.0) {
      while (bridge_score(bank, lo) < 0.0) {
        hi = lo;
        lo = x - width;
        width *= 2.0;
        if (++result.iterations >= options.max_iter || lo < -700.0)
          throw EstimationError("bridge_optimal: no root below the current iterate", x);
      }
    }
    while (hi - lo > log_tol) {
      const double mid = 0.5 * (lo + hi);
      const double sm = bridge_score(bank, mid);
      if (sm == 0.0) {
        lo = hi = mid;
        break;
      }
      (sm > 0.0 ? lo : hi) = mid;
      if (++result.iterations >= options.max_iter)
        throw EstimationError("bridge_optimal: bisection did not converge", mid);
    }
    x = 0.5 * (lo + hi);
  }

  result.log_ratio = x;
  result.residual = bridge_score(bank, x);
  if (!(std::abs(result.residual) <= 1e-8 * score_scale(bank)))
    throw EstimationError("bridge_optimal: root residual too large", x);
  return result;
}

RatioEstimate ris_estimate(const SampleBank& bank, const LogDensity& pi) {
  require_nonempty(bank.draws_pi, "ris_estimate");
  LogSumAccumulator num, den;
  for (const auto& d : bank.draws_pi) {
    const double lp = pi(d.z);
    if (lp == kNegInf || std::isnan(lp))
      throw ProposalSupportError("ris_estimate: proposal density is zero at a draw");
    num.add(d.log_weight + d.log_f0 - lp);
    den.add(d.log_weight + d.log_f1 - lp);
  }
  if (den.value() == kNegInf) throw EstimationError("ris_estimate: denominator is zero");
  return {num.value() - den.value()};
}

}  // namespace saris
