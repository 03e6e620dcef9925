#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "saris/density.hpp"
#include "saris/rng.hpp"
#include "saris/samplers.hpp"
#include "saris/schedule.hpp"

namespace saris {

/// Linear tracks r_k; Log tracks g_k = log r_k and evaluates increments at exp(g_k).
enum class IterateMode { Linear, Log };

inline constexpr double kRatioFloor = 1e-300;
inline constexpr double kRatioCeiling = 1e300;

struct SaState {
  double iterate = 0.0;
  double average = 0.0;  // Polyak mean of post-burn iterates (initial iterate before any)
  std::int64_t k = 0;
  IterateMode mode = IterateMode::Log;
  std::int64_t average_burn = 0;
  std::int64_t averaged = 0;
};

SaState make_sa_state(double initial_ratio, IterateMode mode, std::int64_t average_burn);

/// The ratio at which the next increment is evaluated, clamped to
/// [1e-300, 1e300]. The stored iterate itself is never clamped.
double evaluation_ratio(const SaState& state);

/// iterate += gamma_{k+1} * increment; the average absorbs the new iterate when
/// k >= average_burn; k is incremented. Throws on a non-finite increment.
SaState sa_update(SaState state, double increment, const StepSchedule& schedule);

struct StoppingRule {
  std::int64_t max_iters = 0;
  std::int64_t window = 0;  // 0 disables the moving-window rule
  double tol = 0.0;

  static StoppingRule fixed_budget(std::int64_t iterations) { return {iterations, 0, 0.0}; }
};

/// Tracks the averaged iterate over the last `window` iterations.
class StoppingMonitor {
 public:
  explicit StoppingMonitor(StoppingRule rule) : rule_(rule) {}
  void observe(const SaState& state);
  bool done(const SaState& state) const;

 private:
  StoppingRule rule_;
  std::deque<double> recent_;
};

/// H = (f0(z) - r f1(z)) / pi~_r(z), computed as sign * exp(log|diff| - log pi~).
/// Opt gives exactly sign(f0 - r f1); Mixt gives the bounded tanh form.
double saris_increment(const RatioProblem& problem, const ProposalFamily& proposal, double r,
                       const Point& z);

/// Same, from precomputed log f0(z), log f1(z).
double saris_increment(const ProposalFamily& proposal, double r, double log_f0, double log_f1,
                       const Point& z);

/// (f0 - r f1) / (f0 + r f1) = tanh((log f0 - log(r f1)) / 2).
double saris_mixt_increment(double log_f0, double log_f1, double r);
double saris_mixt_increment(const RatioProblem& problem, double r, const Point& z);

// Sampling schemes understood by run_saris ---------------------------------

/// Z_{k+1} drawn exactly from pi_{r_k} of the proposal family.
struct ExactProposalDraws {
  ExactSampler sampler;
};

/// Z_{k+1} drawn exactly from the fixed 1/2 (p0 + p1) mixture.
struct ExactMixtureDraws {
  ExactSampler sampler;
};

/// One step of a non-homogeneous adaptive MH chain targeting pi~_{r_k}.
/// The chain is heated for n_heat steps at the initial ratio first.
struct MhProposalChain {
  Point start;
  std::int64_t n_heat = 0;
  MoveKind move = MoveKind::GaussianWalk;
};

/// Two adaptive MH chains on p0 and p1 (each heated n_heat steps), combined by mixture_draw.
struct MhMixtureChains {
  Point start;
  std::int64_t n_heat = 0;
  MoveKind move = MoveKind::GaussianWalk;
};

/// Pre-generated p0 / p1 draws; iteration k picks draws0[k] or draws1[k] by a coin.
struct ReplayMixtureDraws {
  std::vector<Point> draws0;
  std::vector<Point> draws1;
};

using SamplerSpec =
    std::variant<ExactProposalDraws, ExactMixtureDraws, MhProposalChain, MhMixtureChains,
                 ReplayMixtureDraws>;

struct SarisOptions {
  IterateMode mode = IterateMode::Log;
  double initial_ratio = 1.0;
  std::optional<std::int64_t> average_burn;  // defaults to schedule.k_heat
  bool record_path = true;
};

struct TracePoint {
  std::int64_t k = 0;
  double gamma = 0.0;
  double iterate = 0.0;
  double average = 0.0;
};

struct Trace {
  std::vector<TracePoint> path;
  IterateMode mode = IterateMode::Log;
  std::string flavor;
  double initial_iterate = 0.0;
  double final_iterate = 0.0;
  double final_average = 0.0;
  std::int64_t iterations = 0;
  std::int64_t draws = 0;       // target-evaluating draws after heating
  std::int64_t heat_draws = 0;  // draws spent heating MH chains
  bool failed = false;
  std::string failure;

  /// Polyak-averaged estimate of log r*.
  double log_estimate() const;
  /// Polyak-averaged estimate of r* (Log mode exponentiates).
  double estimate() const;
};

/// Runs the SARIS / SARIS-EXT / SARIS-MIXT recursion. Which one is decided
/// by the pair (proposal, sampler): Mixt increments with a fixed-mixture
/// sampler give SARIS-MIXT; proposal-tracking samplers give SARIS or
/// SARIS-EXT. A non-finite iterate stops the run with `failed` set.
Trace run_saris(const RatioProblem& problem, const ProposalFamily& proposal,
                const SamplerSpec& sampler, const StepSchedule& schedule,
                const StoppingRule& stopping, const SarisOptions& options, Rng& rng);

/// Single normalizing constant c = integral of f, against a normalized
/// reference density. The caller guarantees the reference integrates to one.
Trace estimate_single_constant(const LogDensity& f, const LogDensity& reference,
                               const ProposalFamily& proposal, const SamplerSpec& sampler,
                               const StepSchedule& schedule, const StoppingRule& stopping,
                               const SarisOptions& options, Rng& rng);

/// CSV header "replication,k,gamma,iterate,average,flavor".
void write_trace_csv_header(std::ostream& out);
void write_trace_csv(std::ostream& out, const Trace& trace, int replication);

}  // namespace saris
