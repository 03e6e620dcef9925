#include "saris/sa.hpp"

#include <algorithm>
#include <cmath>

#include "saris/csv.hpp"
#include "saris/logmath.hpp"

namespace saris {

SaState make_sa_state(double initial_ratio, IterateMode mode, std::int64_t average_burn) {
  if (mode == IterateMode::Log && !(initial_ratio > 0.0))
    throw std::invalid_argument("make_sa_state: log mode needs a positive initial ratio");
  if (average_burn < 0) throw std::invalid_argument("make_sa_state: negative burn");
  SaState s;
  s.mode = mode;
  s.iterate = mode == IterateMode::Log ? std::log(initial_ratio) : initial_ratio;
  s.average = s.iterate;
  s.average_burn = average_burn;
  return s;
}

double evaluation_ratio(const SaState& state) {
  const double r = state.mode == IterateMode::Log ? std::exp(state.iterate) : state.iterate;
  if (std::isnan(r)) return r;
  return std::clamp(r, kRatioFloor, kRatioCeiling);
}

SaState sa_update(SaState state, double increment, const StepSchedule& schedule) {
  if (!std::isfinite(increment)) throw std::domain_error("sa_update: non-finite increment");
  state.iterate += gamma(schedule, state.k + 1) * increment;
  if (state.k >= state.average_burn) {
    ++state.averaged;
    state.average += (state.iterate - state.average) / static_cast<double>(state.averaged);
  }
  ++state.k;
  return state;
}

void StoppingMonitor::observe(const SaState& state) {
  if (rule_.window <= 0) return;
  recent_.push_back(state.average);
  if (static_cast<std::int64_t>(recent_.size()) > rule_.window) recent_.pop_front();
}

bool StoppingMonitor::done(const SaState& state) const {
  if (state.k >= rule_.max_iters) return true;
  if (rule_.window > 0 && static_cast<std::int64_t>(recent_.size()) == rule_.window) {
    const auto [lo, hi] = std::minmax_element(recent_.begin(), recent_.end());
    return *hi - *lo < rule_.tol;
  }
  return false;
}

// ---------------------------------------------------------------------------

double saris_mixt_increment(double log_f0, double log_f1, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("saris_mixt_increment: r must be positive");
  if (log_f0 == kNegInf && log_f1 == kNegInf) return 0.0;
  return std::tanh(0.5 * (log_f0 - (std::log(r) + log_f1)));
}

double saris_mixt_increment(const RatioProblem& problem, double r, const Point& z) {
  return saris_mixt_increment(problem.f0()(z), problem.f1()(z), r);
}

double saris_increment(const ProposalFamily& proposal, double r, double log_f0, double log_f1,
                       const Point& z) {
  switch (proposal.flavor) {
    case ProposalFlavor::Mixt: return saris_mixt_increment(log_f0, log_f1, r);
    case ProposalFlavor::Opt: {
      if (!(r > 0.0)) throw std::invalid_argument("saris_increment: r must be positive");
      return static_cast<double>(log_diff(log_f0, std::log(r) + log_f1).sign);
    }
    case ProposalFlavor::Fixed: {
      // r may be nonpositive during linear-mode transients.
      const SignedLog diff = r > 0.0    ? log_diff(log_f0, std::log(r) + log_f1)
                             : r == 0.0 ? SignedLog{log_f0, log_f0 == kNegInf ? 0 : 1}
                                        : SignedLog{log_add(log_f0, std::log(-r) + log_f1), 1};
      if (diff.sign == 0) return 0.0;
      const double log_pi = (*proposal.fixed)(z);
      if (log_pi == kNegInf || std::isnan(log_pi))
        throw ProposalSupportError("saris_increment: proposal density is zero where f0 != r f1");
      return diff.sign * std::exp(diff.log_abs - log_pi);
    }
  }
  return 0.0;
}

double saris_increment(const RatioProblem& problem, const ProposalFamily& proposal, double r,
                       const Point& z) {
  return saris_increment(proposal, r, problem.f0()(z), problem.f1()(z), z);
}

// ---------------------------------------------------------------------------

double Trace::log_estimate() const {
  if (mode == IterateMode::Log) return final_average;
  return std::log(std::max(final_average, kRatioFloor));
}

double Trace::estimate() const {
  return mode == IterateMode::Log ? std::exp(final_average) : final_average;
}

namespace {

std::string flavor_label(const ProposalFamily& proposal, const SamplerSpec& sampler) {
  const bool fixed_mixture = std::holds_alternative<ExactMixtureDraws>(sampler) ||
                             std::holds_alternative<MhMixtureChains>(sampler) ||
                             std::holds_alternative<ReplayMixtureDraws>(sampler);
  if (proposal.flavor == ProposalFlavor::Fixed) return "saris-fixed";
  if (fixed_mixture && proposal.flavor == ProposalFlavor::Mixt) return "saris-mixt";
  return std::string("saris-ext-") + to_string(proposal.flavor);
}

LogTarget proposal_target(const RatioProblem& problem, const ProposalFamily& proposal,
                          double log_r) {
  if (proposal.flavor == ProposalFlavor::Fixed) return proposal.fixed->eval;
  return [&problem, &proposal, log_r](const Point& z) {
    return log_unnorm_proposal(proposal, log_r, problem.f0()(z), problem.f1()(z), z);
  };
}

/// Per-run sampler state; one draw per call to next().
class DrawSource {
 public:
  DrawSource(const RatioProblem& problem, const ProposalFamily& proposal, const SamplerSpec& spec,
             double initial_ratio, Rng& rng, Trace& trace)
      : problem_(problem), proposal_(proposal), spec_(spec), rng_(rng), trace_(trace) {
    if (proposal_.flavor == ProposalFlavor::Fixed && !proposal_.fixed)
      throw std::invalid_argument("run_saris: Fixed proposal without a density");
    if (const auto* mh = std::get_if<MhProposalChain>(&spec_)) {
      const auto target = proposal_target(problem_, proposal_, std::log(initial_ratio));
      chain_ = heat(make_kernel(mh->start, target, mh->move), target, mh->n_heat, rng_);
      trace_.heat_draws += mh->n_heat;
    } else if (const auto* mc = std::get_if<MhMixtureChains>(&spec_)) {
      chains_ = heat(make_dual_chain(problem_, mc->start, mc->move), problem_, mc->n_heat, rng_);
      trace_.heat_draws += 2 * mc->n_heat;
    } else if (const auto* rp = std::get_if<ReplayMixtureDraws>(&spec_)) {
      if (rp->draws0.size() != rp->draws1.size())
        throw std::invalid_argument("ReplayMixtureDraws: draw lists differ in length");
    }
  }

  Point next(double r, std::int64_t k) {
    return std::visit([&](const auto& s) { return draw(s, r, k); }, spec_);
  }

 private:
  Point draw(const ExactProposalDraws& s, double r, std::int64_t) {
    ++trace_.draws;
    return s.sampler.draw_proposal(proposal_, r, rng_);
  }
  Point draw(const ExactMixtureDraws& s, double, std::int64_t) {
    ++trace_.draws;
    return s.sampler.draw_fixed_mixture(rng_);
  }
  Point draw(const MhProposalChain&, double r, std::int64_t) {
    const auto target = proposal_target(problem_, proposal_, std::log(r));
    refresh(*chain_, target);
    *chain_ = mh_step(std::move(*chain_), target, rng_);
    ++trace_.draws;
    return chain_->position;
  }
  Point draw(const MhMixtureChains&, double, std::int64_t) {
    MixtureDraw d = mixture_draw(std::move(*chains_), problem_, rng_);
    chains_ = std::move(d.chains);
    trace_.draws += 2;
    return std::move(d.z);
  }
  Point draw(const ReplayMixtureDraws& s, double, std::int64_t k) {
    const auto i = static_cast<std::size_t>(k);
    if (i >= s.draws0.size()) throw std::out_of_range("ReplayMixtureDraws: ran out of draws");
    trace_.draws += 2;
    return rng_.coin() ? s.draws1[i] : s.draws0[i];
  }

  const RatioProblem& problem_;
  const ProposalFamily& proposal_;
  const SamplerSpec& spec_;
  Rng& rng_;
  Trace& trace_;
  std::optional<MhKernelState> chain_;
  std::optional<DualChain> chains_;
};

}  // namespace

Trace run_saris(const RatioProblem& problem, const ProposalFamily& proposal,
                const SamplerSpec& sampler, const StepSchedule& schedule,
                const StoppingRule& stopping, const SarisOptions& options, Rng& rng) {
  schedule.validate();
  Trace trace;
  trace.mode = options.mode;
  trace.flavor = flavor_label(proposal, sampler);

  SaState state = make_sa_state(options.initial_ratio, options.mode,
                                options.average_burn.value_or(schedule.k_heat));
  trace.initial_iterate = state.iterate;
  if (options.record_path && stopping.max_iters > 0)
    trace.path.reserve(static_cast<std::size_t>(stopping.max_iters));

  DrawSource source(problem, proposal, sampler, std::max(options.initial_ratio, kRatioFloor), rng,
                    trace);
  StoppingMonitor monitor(stopping);

  while (!monitor.done(state)) {
    const double r = evaluation_ratio(state);
    const double r_eval = options.mode == IterateMode::Linear &&
                                  proposal.flavor == ProposalFlavor::Fixed
                              ? state.iterate
                              : r;
    const Point z = source.next(r, state.k);
    const double lf0 = problem.f0()(z);
    const double lf1 = problem.f1()(z);
    const double h = saris_increment(proposal, r_eval, lf0, lf1, z);
    const double g = gamma(schedule, state.k + 1);
    state = sa_update(state, h, schedule);
    monitor.observe(state);
    if (options.record_path) trace.path.push_back({state.k, g, state.iterate, state.average});
    if (!std::isfinite(state.iterate)) {
      trace.failed = true;
      trace.failure = "non-finite iterate at k=" + std::to_string(state.k);
      break;
    }
  }

  trace.iterations = state.k;
  trace.final_iterate = state.iterate;
  trace.final_average = state.average;
  return trace;
}

Trace estimate_single_constant(const LogDensity& f, const LogDensity& reference,
                               const ProposalFamily& proposal, const SamplerSpec& sampler,
                               const StepSchedule& schedule, const StoppingRule& stopping,
                               const SarisOptions& options, Rng& rng) {
  const RatioProblem problem(f, reference);
  return run_saris(problem, proposal, sampler, schedule, stopping, options, rng);
}

void write_trace_csv_header(std::ostream& out) {
  out << "replication,k,gamma,iterate,average,flavor\n";
}

void write_trace_csv(std::ostream& out, const Trace& trace, int replication) {
  for (const auto& p : trace.path) {
    out << replication << ',' << p.k << ',' << format_double(p.gamma) << ','
        << format_double(p.iterate) << ',' << format_double(p.average) << ',' << trace.flavor
        << '\n';
  }
}

}  // namespace saris
