#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "saris/density.hpp"

namespace saris {

/// A draw with its cached log f0, log f1. log_weight is 0 for sampled draws;
/// enumeration banks carry log p(z) so weighted means become exact sums.
struct EvaluatedDraw {
  Point z;
  double log_f0 = 0.0;
  double log_f1 = 0.0;
  double log_weight = 0.0;
};

/// Fixed-sample input to the baseline estimators. Treated as immutable once
/// built; estimators only read it.
struct SampleBank {
  std::vector<EvaluatedDraw> draws0;    // targeted at p0
  std::vector<EvaluatedDraw> draws1;    // targeted at p1
  std::vector<EvaluatedDraw> draws_pi;  // from a fixed proposal

  static SampleBank from_draws(const RatioProblem& problem, const std::vector<Point>& draws0,
                               const std::vector<Point>& draws1,
                               const std::vector<Point>& draws_pi = {});

  /// Exhaustive bank for a discrete fixture: every support point, weighted
  /// by p0, p1 and (if given) pi respectively.
  static SampleBank enumeration(const RatioProblem& problem, const LogDensity* pi = nullptr);

  /// True when every cached pair equals a fresh evaluation.
  bool verify(const RatioProblem& problem) const;
};

std::vector<EvaluatedDraw> evaluate_draws(const RatioProblem& problem,
                                          const std::vector<Point>& points);

/// Raised when an estimator cannot produce a finite positive ratio.
class EstimationError : public std::runtime_error {
 public:
  EstimationError(const std::string& what, double last_log_ratio = 0.0)
      : std::runtime_error(what), last_log_ratio(last_log_ratio) {}
  double last_log_ratio;
};

struct RatioEstimate {
  double log_ratio = 0.0;
  double ratio() const;
};

/// mean_{draws1}[f0 alpha] / mean_{draws0}[f1 alpha], each side by log-sum-exp.
/// log_alpha returns log alpha(z); -inf is allowed (alpha = 0).
RatioEstimate bridge_estimate(const SampleBank& bank,
                              const std::function<double(const Point&)>& log_alpha);

struct BridgeOptions {
  double r_init = 1.0;
  double tol = 1e-10;
  int max_iter = 1000;
};

struct BridgeResult {
  double log_ratio = 0.0;
  int iterations = 0;
  double residual = 0.0;  // score at the fixed point, sum scale
  bool used_bracketing = false;
  double ratio() const;
};

/// Score of the optimal-bridge root equation at log r, in sum scale:
/// sum_{draws1} f0/(r f1 + f0) - sum_{draws0} r f1/(r f1 + f0).
/// Strictly decreasing in r.
double bridge_score(const SampleBank& bank, double log_r);

/// Fixed-point iteration for the optimal bridge. If the iteration starts to
/// oscillate or stalls, the monotone score is bisected in log r instead;
/// both converge to the same root. Throws EstimationError when no root is
/// found within max_iter or the residual exceeds 1e-8 K.
BridgeResult bridge_optimal(const SampleBank& bank, const BridgeOptions& options = {});

/// mean_pi[f0/pi] / mean_pi[f1/pi] over draws_pi. Throws
/// ProposalSupportError if pi(z) = 0 at a draw.
RatioEstimate ris_estimate(const SampleBank& bank, const LogDensity& pi);

}  // namespace saris
