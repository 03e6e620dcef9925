#include "saris/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace saris {

StepSchedule default_adaptation_schedule() { return StepSchedule::polynomial(1.0, 1.0, 0.6); }

double target_acceptance_rate(std::size_t dim) { return dim <= 1 ? 0.44 : 0.234; }

MhKernelState make_kernel(Point start, const LogTarget& target, MoveKind move) {
  MhKernelState state;
  state.position = std::move(start);
  state.move = move;
  refresh(state, target);
  return state;
}

void refresh(MhKernelState& state, const LogTarget& target) {
  state.log_target_value = target(state.position);
}

MhKernelState mh_step(MhKernelState state, const LogTarget& target, Rng& rng) {
  if (!std::isfinite(state.log_target_value)) refresh(state, target);

  Point proposal = state.position;
  if (state.move == MoveKind::GaussianWalk) {
    for (std::size_t i = 0; i < proposal.dim(); ++i) proposal[i] += state.proposal_scale * rng.normal();
  } else {
    proposal[0] += rng.coin() ? 1.0 : -1.0;
  }

  const double proposed = target(proposal);
  const double current = state.log_target_value;
  bool accepted = false;
  if (std::isnan(proposed) || proposed == kNegInf) {
    accepted = false;
  } else if (!std::isfinite(current)) {
    accepted = true;
  } else {
    accepted = std::log(rng.uniform()) <= proposed - current;
  }

  if (accepted) {
    state.position = std::move(proposal);
    state.log_target_value = proposed;
    ++state.acceptance_count;
  }

  if (state.adapt && state.move == MoveKind::GaussianWalk) {
    const double gain = gamma(state.adaptation, state.step_count);
    const double target_rate = target_acceptance_rate(state.position.dim());
    const double log_scale =
        std::log(state.proposal_scale) + gain * ((accepted ? 1.0 : 0.0) - target_rate);
    state.proposal_scale =
        std::clamp(std::exp(log_scale), kMinProposalScale, kMaxProposalScale);
  }
  ++state.step_count;
  return state;
}

MhKernelState heat(MhKernelState state, const LogTarget& target, std::int64_t n_heat, Rng& rng) {
  if (n_heat < 0) throw std::invalid_argument("heat: n_heat must be nonnegative");
  for (std::int64_t i = 0; i < n_heat; ++i) state = mh_step(std::move(state), target, rng);
  return state;
}

DualChain make_dual_chain(const RatioProblem& problem, const Point& start, MoveKind move) {
  return {make_kernel(start, problem.f0().eval, move), make_kernel(start, problem.f1().eval, move)};
}

MixtureDraw mixture_draw(DualChain chains, const RatioProblem& problem, Rng& rng) {
  chains.chain0 = mh_step(std::move(chains.chain0), problem.f0().eval, rng);
  chains.chain1 = mh_step(std::move(chains.chain1), problem.f1().eval, rng);
  const int component = rng.coin() ? 1 : 0;
  Point z = component == 0 ? chains.chain0.position : chains.chain1.position;
  return {std::move(z), component, std::move(chains)};
}

DualChain heat(DualChain chains, const RatioProblem& problem, std::int64_t n_heat, Rng& rng) {
  chains.chain0 = heat(std::move(chains.chain0), problem.f0().eval, n_heat, rng);
  chains.chain1 = heat(std::move(chains.chain1), problem.f1().eval, n_heat, rng);
  return chains;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t categorical(const std::vector<double>& log_weights, Rng& rng) {
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(m)) throw std::domain_error("categorical: no positive weight");
  std::vector<double> cumulative(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    total += std::exp(log_weights[i] - m);
    cumulative[i] = total;
  }
  const double u = rng.uniform() * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(it - cumulative.begin(), log_weights.size() - 1);
}

double gaussian_log_f(const GaussianPairFixture& fx, int component, double z) {
  return component == 0 ? fx.log_c0 + log_normal_pdf(z, fx.mean0, fx.sd0 * fx.sd0)
                        : fx.log_c1 + log_normal_pdf(z, fx.mean1, fx.sd1 * fx.sd1);
}

}  // namespace

ExactSampler::ExactSampler(Fixture fixture) : fixture_(std::move(fixture)) {
  if (std::holds_alternative<std::monostate>(fixture_))
    throw std::invalid_argument("ExactSampler: no closed-form fixture");
}

Point ExactSampler::draw_component(int component, Rng& rng) const {
  if (component != 0 && component != 1) throw std::invalid_argument("component must be 0 or 1");
  if (const auto* g = std::get_if<GaussianPairFixture>(&fixture_)) {
    return component == 0 ? Point{rng.normal(g->mean0, g->sd0)} : Point{rng.normal(g->mean1, g->sd1)};
  }
  const auto& d = std::get<DiscreteFixture>(fixture_);
  const auto& w = component == 0 ? d.weights0 : d.weights1;
  std::vector<double> logs(w.size());
  std::transform(w.begin(), w.end(), logs.begin(), [](double x) { return std::log(x); });
  return Point{double(categorical(logs, rng))};
}

Point ExactSampler::draw_fixed_mixture(Rng& rng, int* component) const {
  const int c = rng.coin() ? 1 : 0;
  if (component) *component = c;
  return draw_component(c, rng);
}

Point ExactSampler::draw_proposal(const ProposalFamily& family, double r, Rng& rng) const {
  if (!(r > 0.0)) throw std::invalid_argument("draw_proposal: r must be positive");
  const double log_r = std::log(r);

  if (const auto* d = std::get_if<DiscreteFixture>(&fixture_)) {
    std::vector<double> logs(d->weights0.size());
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const Point z{double(i)};
      logs[i] = log_unnorm_proposal(family, log_r, std::log(d->weights0[i]), std::log(d->weights1[i]), z);
    }
    return Point{double(categorical(logs, rng))};
  }

  const auto& g = std::get<GaussianPairFixture>(fixture_);
  auto draw_mixt = [&] {
    // P(component 1) = r c1 / (c0 + r c1)
    const double p1 = 1.0 / (1.0 + std::exp(g.log_c0 - log_r - g.log_c1));
    return draw_component(rng.uniform() < p1 ? 1 : 0, rng);
  };
  switch (family.flavor) {
    case ProposalFlavor::Mixt: return draw_mixt();
    case ProposalFlavor::Opt:
      // |f0 - r f1| <= f0 + r f1: accept a Mixt draw with probability |tanh(...)|.
      for (int attempt = 0; attempt < 1'000'000; ++attempt) {
        Point z = draw_mixt();
        const double d = gaussian_log_f(g, 0, z[0]) - gaussian_log_f(g, 1, z[0]) - log_r;
        if (rng.uniform() < std::abs(std::tanh(0.5 * d))) return z;
      }
      throw std::runtime_error("draw_proposal: Opt rejection sampler did not accept");
    case ProposalFlavor::Fixed: break;
  }
  throw std::invalid_argument("draw_proposal: Fixed proposals have no exact Gaussian sampler");
}

std::optional<ExactSampler> exact_sampler_for(const RatioProblem& problem) {
  if (std::holds_alternative<std::monostate>(problem.fixture())) return std::nullopt;
  return ExactSampler(problem.fixture());
}

}  // namespace saris
