#include "doctest.h"

#include <cmath>
#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

#include "saris/density.hpp"
#include "saris/logmath.hpp"
#include "saris/sa.hpp"

using namespace saris;

namespace {

RatioProblem constant_problem(double lf0, double lf1) {
  return RatioProblem(LogDensity{[lf0](const Point&) { return lf0; }, 1},
                      LogDensity{[lf1](const Point&) { return lf1; }, 1});
}

SarisOptions quiet(IterateMode mode = IterateMode::Log, std::int64_t burn = 0) {
  SarisOptions o;
  o.mode = mode;
  o.average_burn = burn;
  return o;
}

}  // namespace

TEST_CASE("Opt increment is the sign of f0 - r f1") {
  const Point z{0.0};
  CHECK(saris_increment(constant_problem(std::log(3.0), 0.0), ProposalFamily::opt(), 2.0, z) == 1.0);
  CHECK(saris_increment(constant_problem(0.0, 0.0), ProposalFamily::opt(), 2.0, z) == -1.0);
  CHECK(saris_increment(constant_problem(std::log(2.0), 0.0), ProposalFamily::opt(), 2.0, z) == 0.0);
}

TEST_CASE("Mixt increment values") {
  const Point z{0.0};
  CHECK(saris_increment(constant_problem(0.7, 0.7), ProposalFamily::mixt(), 1.0, z) == 0.0);
  CHECK(saris_mixt_increment(constant_problem(std::log(3.0), 0.0), 1.0, z) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(saris_mixt_increment(0.0, kNegInf, 1.0) == 1.0);
  CHECK(saris_mixt_increment(kNegInf, 0.0, 1.0) == -1.0);
  CHECK(saris_mixt_increment(1e308, -1e308, 1.0) == 1.0);
}

TEST_CASE("increments are bounded") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double a = 200.0 * (rng.uniform() - 0.5), b = 200.0 * (rng.uniform() - 0.5);
    const double r = std::exp(40.0 * (rng.uniform() - 0.5));
    REQUIRE(std::abs(saris_mixt_increment(a, b, r)) <= 1.0);
    const double h = saris_increment(ProposalFamily::opt(), r, a, b, Point{0.0});
    REQUIRE((h == 1.0 || h == -1.0 || h == 0.0));
  }
}

TEST_CASE("Fixed increment with pi = p1 equals f0/p1 - r c1 on a discrete fixture") {
  const std::vector<double> w0{1.0, 2.0, 5.0}, w1{3.0, 1.0, 2.0};
  const auto problem = make_discrete_problem(w0, w1);
  const double c1 = 6.0;
  const LogDensity p1{[&](const Point& z) { return std::log(w1[static_cast<std::size_t>(z[0])] / c1); }, 1};
  const auto fixed = ProposalFamily::fixed_density(p1, true);
  for (double r : {0.5, 1.0, 4.0}) {
    for (int k = 0; k < 3; ++k) {
      const double want = w0[k] / (w1[k] / c1) - r * c1;
      CHECK(saris_increment(problem, fixed, r, Point{double(k)}) == doctest::Approx(want).epsilon(1e-13));
    }
  }
}

TEST_CASE("Fixed increment signals a support violation") {
  const auto problem = constant_problem(0.0, 0.0);
  const auto zero = ProposalFamily::fixed_density(LogDensity{[](const Point&) { return kNegInf; }, 1}, false);
  CHECK_THROWS_AS(saris_increment(problem, zero, 2.0, Point{0.0}), ProposalSupportError);
  CHECK(saris_increment(problem, zero, 1.0, Point{0.0}) == 0.0);
}

TEST_CASE("Fixed increment accepts nonpositive linear iterates") {
  const auto problem = constant_problem(std::log(2.0), 0.0);
  const auto flat = ProposalFamily::fixed_density(LogDensity{[](const Point&) { return 0.0; }, 1}, true);
  CHECK(saris_increment(problem, flat, 0.0, Point{0.0}) == doctest::Approx(2.0));
  CHECK(saris_increment(problem, flat, -1.0, Point{0.0}) == doctest::Approx(3.0));
}

TEST_CASE("sa_update examples") {
  const auto unit = StepSchedule::constant(1.0);
  auto s = make_sa_state(0.0, IterateMode::Linear, 0);
  s = sa_update(s, 2.0, unit);
  CHECK(s.iterate == 2.0);
  CHECK(s.k == 1);

  auto t = make_sa_state(3.0, IterateMode::Linear, 0);
  t.average = 0.0;
  t = sa_update(t, 0.0, unit);
  CHECK(t.iterate == 3.0);
  CHECK(t.average == 3.0);

  auto a = make_sa_state(0.0, IterateMode::Linear, 0);
  for (double inc : {1.0, 1.0, 1.0}) a = sa_update(a, inc, unit);
  CHECK(a.average == doctest::Approx(2.0));

  CHECK_THROWS_AS(sa_update(a, NAN, unit), std::domain_error);
  CHECK_THROWS_AS(make_sa_state(0.0, IterateMode::Log, 0), std::invalid_argument);
}

TEST_CASE("burn excludes early iterates from the average") {
  const auto unit = StepSchedule::constant(1.0);
  auto s = make_sa_state(0.0, IterateMode::Linear, 2);
  for (int i = 0; i < 5; ++i) s = sa_update(s, 1.0, unit);
  CHECK(s.averaged == 3);
  CHECK(s.average == doctest::Approx(4.0));
}

TEST_CASE("evaluation ratio is clamped but the stored iterate is not") {
  auto s = make_sa_state(1.0, IterateMode::Log, 0);
  s.iterate = 5000.0;
  CHECK(evaluation_ratio(s) == kRatioCeiling);
  s.iterate = -5000.0;
  CHECK(evaluation_ratio(s) == kRatioFloor);
  CHECK(s.iterate == -5000.0);
  auto lin = make_sa_state(1.0, IterateMode::Linear, 0);
  lin.iterate = -2.0;
  CHECK(evaluation_ratio(lin) == kRatioFloor);
}

TEST_CASE("Polyak recurrence equals the batch mean") {
  Rng rng(2);
  auto s = make_sa_state(1.0, IterateMode::Linear, 0);
  const auto sched = StepSchedule::heated_default();
  std::vector<double> iterates;
  for (int i = 0; i < 10000; ++i) {
    s = sa_update(s, rng.normal(), sched);
    iterates.push_back(s.iterate);
  }
  const double mean = std::accumulate(iterates.begin(), iterates.end(), 0.0) / iterates.size();
  CHECK(std::abs(s.average - mean) < 1e-12);
}

TEST_CASE("stopping rules") {
  StoppingMonitor fixed(StoppingRule::fixed_budget(3));
  auto s = make_sa_state(1.0, IterateMode::Log, 0);
  CHECK_FALSE(fixed.done(s));
  s.k = 3;
  CHECK(fixed.done(s));

  StoppingMonitor window(StoppingRule{1000, 4, 1e-3});
  auto t = make_sa_state(1.0, IterateMode::Log, 0);
  for (int i = 0; i < 3; ++i) {
    window.observe(t);
    CHECK_FALSE(window.done(t));
  }
  window.observe(t);
  CHECK(window.done(t));
}

TEST_CASE("zero-iteration run reports the initial iterate") {
  const auto problem = make_gaussian_shift_problem(1.0);
  Rng rng(3);
  SarisOptions o = quiet();
  o.initial_ratio = 2.5;
  const auto t = run_saris(problem, ProposalFamily::mixt(), ExactProposalDraws{*exact_sampler_for(problem)},
                           StepSchedule::heated_default(), StoppingRule::fixed_budget(0), o, rng);
  CHECK(t.iterations == 0);
  CHECK(t.path.empty());
  CHECK(t.estimate() == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("discrete fixture converges to log(4/3)") {
  const auto problem = make_discrete_problem({1, 1, 2}, {1, 1, 1});
  Rng rng(4);
  const auto t = run_saris(problem, ProposalFamily::mixt(), ExactProposalDraws{*exact_sampler_for(problem)},
                           StepSchedule::polynomial(1.0, 1.0, 2.0 / 3.0), StoppingRule::fixed_budget(100000),
                           quiet(IterateMode::Log, 1000), rng);
  CHECK(std::abs(t.log_estimate() - std::log(4.0 / 3.0)) <= 1e-2);
  CHECK(t.draws == 100000);
  CHECK(t.flavor == "saris-ext-mixt");
}

TEST_CASE("mean increment vanishes at r* under exact proposal sampling") {
  const std::vector<double> w0{1.0, 2.0, 5.0, 0.5}, w1{3.0, 1.0, 2.0, 4.0};
  const auto problem = make_discrete_problem(w0, w1);
  const double r = std::exp(*problem.true_log_ratio());
  for (const auto& fam : {ProposalFamily::mixt(), ProposalFamily::opt()}) {
    double norm = 0.0, acc = 0.0;
    for (const auto& z : discrete_support(problem)) norm += std::exp(log_unnorm_proposal(fam, problem, r, z));
    for (const auto& z : discrete_support(problem))
      acc += std::exp(log_unnorm_proposal(fam, problem, r, z)) / norm * saris_increment(problem, fam, r, z);
    CHECK(std::abs(acc) <= 1e-14);
  }
}

TEST_CASE("trace records every iteration and is reproducible") {
  const auto problem = make_gaussian_shift_problem(1.0);
  auto run = [&] {
    Rng rng(5);
    return run_saris(problem, ProposalFamily::opt(), MhProposalChain{Point{0.0}, 20}, StepSchedule::heated_default(),
                     StoppingRule::fixed_budget(500), quiet(), rng);
  };
  const auto a = run(), b = run();
  REQUIRE(a.path.size() == 500);
  CHECK(a.heat_draws == 20);
  CHECK(a.draws == 500);
  CHECK(a.path.front().k == 1);
  CHECK(a.path.front().gamma == 0.1);
  CHECK(a.flavor == "saris-ext-opt");
  for (std::size_t i = 0; i < a.path.size(); ++i) REQUIRE(a.path[i].iterate == b.path[i].iterate);

  std::ostringstream out;
  write_trace_csv_header(out);
  write_trace_csv(out, a, 7);
  const std::string text = out.str();
  CHECK(text.rfind("replication,k,gamma,iterate,average,flavor\n", 0) == 0);
  CHECK(text.find("\n7,1,0.10000000000000001,") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 501);
}

TEST_CASE("mixture-chain budget counts both chains") {
  const auto problem = make_gaussian_shift_problem(1.0);
  Rng rng(6);
  const auto t = run_saris(problem, ProposalFamily::mixt(), MhMixtureChains{Point{0.0}, 300},
                           StepSchedule::heated_default(), StoppingRule::fixed_budget(5000), quiet(), rng);
  CHECK(t.draws + t.heat_draws == 2 * 5000 + 2 * 300);
  CHECK(t.flavor == "saris-mixt");
}

TEST_CASE("replayed draws run out loudly") {
  const auto problem = make_gaussian_shift_problem(1.0);
  Rng rng(7);
  ReplayMixtureDraws replay{{Point{0.0}, Point{0.1}}, {Point{1.0}, Point{0.9}}};
  CHECK_THROWS_AS(run_saris(problem, ProposalFamily::mixt(), replay, StepSchedule::heated_default(),
                            StoppingRule::fixed_budget(3), quiet(), rng),
                  std::out_of_range);
}

TEST_CASE("Opt traces are bit-identical under joint rescaling") {
  const auto base = make_gaussian_shift_problem(2.0);
  const auto scaled = base.rescaled(-37.5);
  auto run = [](const RatioProblem& p) {
    Rng rng(8);
    return run_saris(p, ProposalFamily::opt(), MhProposalChain{Point{0.0}, 100}, StepSchedule::heated_default(),
                     StoppingRule::fixed_budget(3000), quiet(), rng);
  };
  const auto a = run(base), b = run(scaled);
  for (std::size_t i = 0; i < a.path.size(); ++i) REQUIRE(a.path[i].iterate == b.path[i].iterate);
}

TEST_CASE("Mixt traces agree under joint rescaling up to rounding of log f + log c") {
  const auto base = make_gaussian_shift_problem(2.0);
  const auto scaled = base.rescaled(-37.5);
  const ExactMixtureDraws draws{*exact_sampler_for(base)};
  auto run = [&](const RatioProblem& p) {
    Rng rng(9);
    return run_saris(p, ProposalFamily::mixt(), draws, StepSchedule::heated_default(),
                     StoppingRule::fixed_budget(3000), quiet(), rng);
  };
  const auto a = run(base), b = run(scaled);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.path.size(); ++i)
    worst = std::max(worst, std::abs(a.path[i].iterate - b.path[i].iterate));
  CHECK(worst < 1e-12);
}

// Decaying gains capped at 0.1. A 300-step constant heating phase at 0.1
// lets second-order terms accumulate to a gap of roughly 0.05-0.1.
TEST_CASE("linear and log recursions agree to first order") {
  const auto problem = make_gaussian_shift_problem(1.0);
  const ExactMixtureDraws draws{*exact_sampler_for(problem)};
  auto run = [&](IterateMode mode) {
    Rng rng(10);
    return run_saris(problem, ProposalFamily::mixt(), draws, StepSchedule::polynomial(0.1, 1.0, 2.0 / 3.0),
                     StoppingRule::fixed_budget(1000), quiet(mode), rng);
  };
  const auto lin = run(IterateMode::Linear), lg = run(IterateMode::Log);
  double worst = 0.0;
  for (std::size_t i = 0; i < lin.path.size(); ++i)
    worst = std::max(worst, std::abs(std::exp(lg.path[i].iterate) - lin.path[i].iterate));
  CHECK(worst <= 0.05);
}

TEST_CASE("single normalizing constants") {
  const double log_sqrt_2pi = 0.5 * std::log(2.0 * M_PI);
  const LogDensity reference{[=](const Point& z) { return -0.5 * z[0] * z[0] - log_sqrt_2pi; }, 1};
  const auto sched = StepSchedule::polynomial(1.0, 1.0, 2.0 / 3.0);

  SUBCASE("twice the reference") {
    const LogDensity f{[=](const Point& z) { return std::log(2.0) - 0.5 * z[0] * z[0] - log_sqrt_2pi; }, 1};
    const ExactSampler sampler(GaussianPairFixture{0.0, 1.0, std::log(2.0), 0.0, 1.0, 0.0});
    Rng rng(11);
    const auto t = estimate_single_constant(f, reference, ProposalFamily::mixt(), ExactProposalDraws{sampler}, sched,
                                            StoppingRule::fixed_budget(100000), quiet(IterateMode::Log, 1000), rng);
    CHECK(std::abs(t.log_estimate() - std::log(2.0)) <= 1e-2);
  }
  SUBCASE("unnormalized N(0, 4)") {
    const double log_c = 0.5 * std::log(2.0 * M_PI * 4.0);
    const LogDensity f{[](const Point& z) { return -z[0] * z[0] / 8.0; }, 1};
    const ExactSampler sampler(GaussianPairFixture{0.0, 2.0, log_c, 0.0, 1.0, 0.0});
    Rng rng(12);
    const auto t = estimate_single_constant(f, reference, ProposalFamily::mixt(), ExactProposalDraws{sampler}, sched,
                                            StoppingRule::fixed_budget(100000), quiet(IterateMode::Log, 1000), rng);
    CHECK(std::abs(t.log_estimate() - log_c) <= 2e-2);
  }
  SUBCASE("f equal to the reference") {
    const ExactSampler sampler(GaussianPairFixture{});
    Rng rng(13);
    const auto t = estimate_single_constant(reference, reference, ProposalFamily::mixt(), ExactProposalDraws{sampler},
                                            sched, StoppingRule::fixed_budget(1000), quiet(), rng);
    CHECK(t.log_estimate() == 0.0);
  }
}
