#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "saris/density.hpp"

namespace saris {

enum class QuadratureRule { Trapezoid, AdaptiveSimpson };

/// One-dimensional quadrature on [lower, upper] starting from n_nodes
/// equispaced nodes. Adaptive Simpson refines each initial panel.
struct Quadrature {
  double lower = -10.0;
  double upper = 10.0;
  int n_nodes = 4097;
  QuadratureRule rule = QuadratureRule::AdaptiveSimpson;

  void validate() const;
};

/// Exact summation over the integer points {0, ..., size - 1}.
struct DiscreteSupport {
  std::size_t size = 0;
};

using Integrator = std::variant<Quadrature, DiscreteSupport>;

/// Raised when an integration range leaves more than 1e-6 of a density's mass outside.
class RangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integral of f over the integrator's domain (a sum for DiscreteSupport).
double integrate(const Integrator& integrator, const std::function<double(double)>& f);

/// [min mean - 10 sd, max mean + 10 sd] for Gaussian pairs, the support for discrete fixtures.
Integrator default_integrator(const RatioProblem& problem, int n_nodes = 4097);

/// The Integrator with doubled resolution (2 n - 1 nodes); discrete supports are unchanged.
Integrator refined(const Integrator& integrator);

/// Normalized p0 = f0 / c0 and p1 = f1 / c1 of a fixture problem, as log densities.
struct NormalizedPair {
  LogDensity p0;
  LogDensity p1;
  double log_c0 = 0.0;
  double log_c1 = 0.0;
};
NormalizedPair normalized_pair(const RatioProblem& problem);

/// Psi = integral of p0 p1 / (1/2 (p0 + p1)), in [0, 1].
double overlap_psi(const LogDensity& p0, const LogDensity& p1, const Integrator& integrator);

/// 4 r*^2 (1/Psi - 1); +inf when Psi = 0.
double v_bridge_opt(double psi, double r_star);

/// The bridge variance evaluated directly from its integral form.
double v_bridge_opt_integral(const LogDensity& p0, const LogDensity& p1,
                             const Integrator& integrator, double r_star);

/// r*^2 (integral |p1 - p0|)^2.
double v_ris_opt(const LogDensity& p0, const LogDensity& p1, const Integrator& integrator,
                 double r_star);

enum class SamplingScheme {
  ProposalSampling,  // Z ~ pi_{r_k}: SARIS / SARIS-EXT
  FixedMixture,      // Z ~ 1/2 (p0 + p1) with the Mixt increment: SARIS-MIXT
};

/// Asymptotic variance of the averaged SARIS iterate (r scale).
/// ProposalSampling: (1/c1^2) E_pi[((f0 - r* f1) / pi)^2] with pi the
/// numerically normalized proposal at r*. FixedMixture: Var(H) / h'(r*)^2
/// for the Mixt increment under the fixed mixture (proposal must be Mixt).
double v_saris(const RatioProblem& problem, const ProposalFamily& proposal, double r_star,
               double c1, const Integrator& integrator,
               SamplingScheme scheme = SamplingScheme::ProposalSampling);

/// Delta-method variance of the ratio-of-means estimator solving
/// mean[f0/pi~_r] = r mean[f1/pi~_r] over draws from 1/2 (p0 + p1), with pi~_r = f0 + r f1.
double v_ris_mixt(const RatioProblem& problem, double r_star, double c1,
                  const Integrator& integrator);

struct VarianceReport {
  double psi = 0.0;
  double v_bridge_opt = 0.0;
  double v_ris_opt = 0.0;
  double v_ext_mixt = 0.0;
  double v_saris_mixt = 0.0;
  double v_ris_mixt = 0.0;
  double max_rel_err = 0.0;
  bool identity_ok = false;      // max_rel_err < 1e-6
  bool ris_le_bridge = false;    // v_ris_opt <= v_bridge_opt
  bool ext_bounded = false;      // v_ext_mixt <= 4 r*^2
  bool bridge_gt_100x_ext = false;
  double bridge_over_ext = 0.0;  // v_bridge_opt / v_ext_mixt (1/Psi)
};

/// Computes every variance independently and checks
/// V_ext_mixt = Psi V_bridge_opt = Psi^2 V_ris_mixt = Psi^2 V_saris_mixt.
/// When all variances vanish the identity holds vacuously.
VarianceReport variance_identity_check(const RatioProblem& problem, const Integrator& integrator);

/// JSON object text with the report fields.
std::string to_json(const VarianceReport& report);

struct ReplicationStats {
  std::size_t n_reps = 0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 for a single estimate
  double mse = 0.0;
  double q05 = 0.0, q50 = 0.0, q95 = 0.0;
};

/// Mean, sample sd, mean squared error against truth and linearly
/// interpolated quantiles of the order statistics.
ReplicationStats replication_stats(const std::vector<double>& estimates, double truth);

/// Linear interpolation between order statistics at position p (n - 1).
double quantile(std::vector<double> values, double p);

}  // namespace saris
