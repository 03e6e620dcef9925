#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>

#include "saris/density.hpp"
#include "saris/logmath.hpp"
#include "saris/rng.hpp"
#include "saris/schedule.hpp"

namespace saris {

using LogTarget = std::function<double(const Point&)>;

/// Random-walk move. GaussianWalk perturbs every coordinate by N(0, scale^2);
/// NearestNeighbor moves the (integer) first coordinate by +-1 with equal odds.
enum class MoveKind { GaussianWalk, NearestNeighbor };

inline constexpr double kMinProposalScale = 1e-6;
inline constexpr double kMaxProposalScale = 1e6;

/// Diminishing adaptation gain for the proposal scale: 1 / (1 + k^0.6).
StepSchedule default_adaptation_schedule();

/// Acceptance rate the scale adaptation aims for: 0.44 in one dimension, 0.234 otherwise.
double target_acceptance_rate(std::size_t dim);

struct MhKernelState {
  Point position;
  double log_target_value = kNegInf;
  double proposal_scale = 1.0;
  std::int64_t acceptance_count = 0;
  std::int64_t step_count = 0;
  StepSchedule adaptation = default_adaptation_schedule();
  MoveKind move = MoveKind::GaussianWalk;
  bool adapt = true;

  double acceptance_rate() const {
    return step_count == 0 ? 0.0 : double(acceptance_count) / double(step_count);
  }
};

/// Kernel at `start` with its cached log-target filled in.
MhKernelState make_kernel(Point start, const LogTarget& target, MoveKind move = MoveKind::GaussianWalk);

/// Re-evaluates the cached log-target (used when the target moved with r_k).
void refresh(MhKernelState& state, const LogTarget& target);

/// One Metropolis step followed by the multiplicative scale update
/// log(scale) += gain_k * (accepted - target_rate), clamped to [1e-6, 1e6].
/// Proposals evaluating to NaN or -inf are rejected. A stale -inf cache is
/// recomputed before proposing.
MhKernelState mh_step(MhKernelState state, const LogTarget& target, Rng& rng);

/// n_heat successive mh_step calls.
MhKernelState heat(MhKernelState state, const LogTarget& target, std::int64_t n_heat, Rng& rng);

struct DualChain {
  MhKernelState chain0;  // targets p0
  MhKernelState chain1;  // targets p1
};

DualChain make_dual_chain(const RatioProblem& problem, const Point& start,
                          MoveKind move = MoveKind::GaussianWalk);

struct MixtureDraw {
  Point z;
  int component = 0;  // 0 or 1: which chain supplied z
  DualChain chains;
};

/// Advances both chains one step and returns the position of one of them,
/// chosen by a fair coin: a draw from the 1/2 (p0 + p1) mixture.
MixtureDraw mixture_draw(DualChain chains, const RatioProblem& problem, Rng& rng);

DualChain heat(DualChain chains, const RatioProblem& problem, std::int64_t n_heat, Rng& rng);

/// Exact iid draws for problems whose normalized densities are known in
/// closed form: the Gaussian pair fixtures and discrete fixtures.
class ExactSampler {
 public:
  explicit ExactSampler(Fixture fixture);

  /// Draw from p_component (0 or 1).
  Point draw_component(int component, Rng& rng) const;

  /// Draw from the fixed 1/2 (p0 + p1) mixture; optionally reports the label.
  Point draw_fixed_mixture(Rng& rng, int* component = nullptr) const;

  /// Draw from pi_r proportional to pi~_r. Mixt uses mixture weights c0 : r c1,
  /// Opt uses enumeration (discrete) or rejection from Mixt (Gaussian), Fixed
  /// is supported for discrete fixtures only.
  Point draw_proposal(const ProposalFamily& family, double r, Rng& rng) const;

 private:
  Fixture fixture_;
};

/// An exact sampler for Gaussian-pair and discrete fixtures, absent otherwise.
std::optional<ExactSampler> exact_sampler_for(const RatioProblem& problem);

}  // namespace saris
