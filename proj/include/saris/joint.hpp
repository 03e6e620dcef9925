#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "saris/rng.hpp"
#include "saris/schedule.hpp"

namespace saris {

/// y_i = b0 + b1 x_i1 + b2 x_i2 + eps_i, eps_i ~ N(0, sigma2), with
/// x_i1 ~ N(mu1, gamma1_sq), x_i2 ~ N(mu2, gamma2_sq) independent.
/// The first n_missing x2 entries are unobserved and stored as NaN.
struct RegressionData {
  std::vector<double> y;
  std::vector<double> x1;
  std::vector<double> x2;
  std::size_t n_missing = 0;
  double sigma2 = 1.0;

  std::size_t n() const { return y.size(); }
  void validate() const;
};

struct Theta {
  double beta0 = 0.0, beta1 = 0.0, beta2 = 0.0;
  double mu1 = 0.0, mu2 = 0.0;
  double gamma1_sq = 1.0, gamma2_sq = 1.0;

  void validate() const;
  friend bool operator==(const Theta&, const Theta&) = default;
};

enum class Hypothesis { H0, H1 };  // H0: beta0 = 0

/// Unconstrained coordinates (b0, b1, b2, mu1, mu2, log gamma1_sq, log gamma2_sq).
using ThetaVector = std::array<double, 7>;
ThetaVector to_unconstrained(const Theta& theta);
Theta from_unconstrained(const ThetaVector& u);

/// Complete-data log-likelihood with the missing x2 taken from fill (length n_missing).
double complete_loglik(const Theta& theta, const RegressionData& data,
                       const std::vector<double>& fill);

/// Gradient of complete_loglik in unconstrained coordinates. Under H0 the
/// beta0 component is zero.
ThetaVector complete_loglik_grad(const Theta& theta, const RegressionData& data,
                                 const std::vector<double>& fill,
                                 Hypothesis hypothesis = Hypothesis::H1);

struct GaussianParams {
  double mean = 0.0;
  double variance = 1.0;
};

/// Conditional law of x_i2 given (y_i, x_i1) under theta.
GaussianParams posterior_x2_params(const Theta& theta, double y, double x1, double sigma2);

/// Observed-data log-likelihood with x2 integrated out for the missing rows.
double exact_marginal_loglik(const Theta& theta, const RegressionData& data);

struct JointState {
  Theta theta0;  // H0 fit, beta0 pinned at 0
  Theta theta1;  // H1 fit
  std::vector<double> fill0;
  std::vector<double> fill1;
  double g = 0.0;  // log-ratio iterate; LR estimate is -2 g
  std::int64_t k = 0;
  bool failed = false;
  std::string failure;

  double lr_estimate() const { return -2.0 * g; }
};

struct JointOptions {
  bool normalize_gradient = true;  // SGD step uses grad / n
};

/// Data-driven start: beta = 0, mu and gamma^2 from observed sample moments,
/// fills at mu2, g = 0.
JointState init_state(const RegressionData& data);

/// One iteration: conjugate redraw of both fills, one SGD ascent step per
/// fit, a uniform pick between the fills, and
/// g += gain * tanh((l0 - l1 - g) / 2) at the updated fits.
/// A non-finite log-likelihood sets `failed` and leaves the fits unchanged.
JointState joint_step(JointState state, const RegressionData& data, const StepSchedule& schedule,
                      Rng& rng, const JointOptions& options = {});

/// -2 (exact(theta0) - exact(theta1)) for each pair.
std::vector<double> exact_lr_trace(const std::vector<std::pair<Theta, Theta>>& states,
                                   const RegressionData& data);

struct MomentUpdate {
  double m = 0.0;
  double v = 0.0;
  double sigma2 = 0.0;
  bool clamped = false;  // sigma2 fell to <= 0 and was set to 1e-8
};

/// m += gain (z - m); v += gain (z^2 - v); sigma2 = v - m^2.
MomentUpdate adaptive_gaussian_moments(double m, double v, double z, double gain);

struct ModelParams {
  double beta0 = 0.1, beta1 = 1.0, beta2 = 1.0;
  double mu1 = 1.0, mu2 = 1.0;
  double gamma1_sq = 1.0, gamma2_sq = 1.0;
  double sigma2 = 2.0;
};

RegressionData simulate_dataset(const ModelParams& params, std::size_t n, std::size_t n_missing,
                                Rng& rng);

/// Result of estimating log L(theta; y) alone with an adaptive Gaussian
/// companion proposal.
struct SingleMarginalResult {
  double log_estimate = 0.0;
  double truth = 0.0;
  std::int64_t clamped_updates = 0;
};

/// theta is held fixed. Each step draws the missing block from its exact
/// posterior, updates a per-coordinate Gaussian q by adaptive_gaussian_moments
/// (gain 1 / (k + 2)), picks the posterior draw or a q draw with equal odds and
/// applies g += gamma_{k+1} tanh((l_f - log q - g) / 2). g starts at the
/// log importance weight of the first pick.
SingleMarginalResult estimate_single_marginal(const Theta& theta, const RegressionData& data,
                                              const StepSchedule& schedule,
                                              std::int64_t iterations, std::int64_t burn,
                                              Rng& rng);

}  // namespace saris
