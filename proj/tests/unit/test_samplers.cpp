#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "saris/density.hpp"
#include "saris/logmath.hpp"
#include "saris/rng.hpp"
#include "saris/samplers.hpp"

using namespace saris;

namespace {

double std_normal(const Point& z) { return -0.5 * z[0] * z[0]; }

}  // namespace

TEST_CASE("derive_seed is a pure function of its three inputs") {
  CHECK(derive_seed(1, 0, "a") == derive_seed(1, 0, "a"));
  std::set<std::uint64_t> seeds;
  for (std::uint64_t m : {1ULL, 2ULL})
    for (std::uint64_t r : {0ULL, 1ULL, 2ULL})
      for (const char* l : {"a", "b"}) seeds.insert(derive_seed(m, r, l));
  CHECK(seeds.size() == 12);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("Rng streams are reproducible and uniform lies in [0, 1)") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(Rng::split(9, 3, "x").seed() == derive_seed(9, 3, "x"));
}

TEST_CASE("mh_step rejects proposals outside the support") {
  Rng rng(1);
  const LogTarget point_mass = [](const Point& z) { return z[0] == 0.0 ? 0.0 : kNegInf; };
  auto s = make_kernel(Point{0.0}, point_mass);
  for (int i = 0; i < 50; ++i) s = mh_step(std::move(s), point_mass, rng);
  CHECK(s.position == Point{0.0});
  CHECK(s.acceptance_count == 0);
  CHECK(s.step_count == 50);
}

TEST_CASE("mh_step accepts a flat target with probability one") {
  Rng rng(2);
  const LogTarget flat = [](const Point&) { return 0.0; };
  auto s = make_kernel(Point{0.0}, flat);
  for (int i = 0; i < 200; ++i) s = mh_step(std::move(s), flat, rng);
  CHECK(s.acceptance_count == 200);
}

TEST_CASE("mh_step rejects NaN proposals and refreshes a stale -inf cache") {
  Rng rng(3);
  const LogTarget nan_off_origin = [](const Point& z) { return z[0] == 1.0 ? 0.0 : std::nan(""); };
  auto s = make_kernel(Point{1.0}, nan_off_origin);
  for (int i = 0; i < 20; ++i) s = mh_step(std::move(s), nan_off_origin, rng);
  CHECK(s.position == Point{1.0});

  auto t = make_kernel(Point{0.0}, std_normal);
  t.log_target_value = kNegInf;
  t = mh_step(std::move(t), std_normal, rng);
  CHECK(t.log_target_value == std_normal(t.position));
}

TEST_CASE("cached log-target stays consistent with the position") {
  Rng rng(4);
  auto s = make_kernel(Point{0.3}, std_normal);
  for (int i = 0; i < 1000; ++i) {
    s = mh_step(std::move(s), std_normal, rng);
    REQUIRE(s.log_target_value == std_normal(s.position));
  }
}

TEST_CASE("adaptation settles near the one-dimensional target rate") {
  Rng rng(5);
  auto s = make_kernel(Point{0.0}, std_normal);
  s = heat(std::move(s), std_normal, 10000, rng);
  const auto before = s.acceptance_count;
  for (int i = 0; i < 10000; ++i) s = mh_step(std::move(s), std_normal, rng);
  const double rate = double(s.acceptance_count - before) / 10000.0;
  CHECK(rate >= 0.34);
  CHECK(rate <= 0.54);
  CHECK(target_acceptance_rate(1) == 0.44);
  CHECK(target_acceptance_rate(3) == 0.234);
}

TEST_CASE("proposal scale stays inside its clamp for a long run") {
  Rng rng(6);
  const auto problem = make_gaussian_shift_problem(1.0);
  auto s = make_kernel(Point{0.0}, problem.f0().eval);
  for (int i = 0; i < 1000000; ++i) {
    s = mh_step(std::move(s), problem.f0().eval, rng);
    if (s.proposal_scale < kMinProposalScale || s.proposal_scale > kMaxProposalScale) FAIL("scale left clamp");
  }
  CHECK(s.proposal_scale > kMinProposalScale);
}

TEST_CASE("heat with zero steps is the identity and heating reaches the typical set") {
  Rng rng(7);
  auto s = make_kernel(Point{50.0}, std_normal);
  const auto same = heat(s, std_normal, 0, rng);
  CHECK(same.position == s.position);
  CHECK(same.step_count == 0);
  CHECK_THROWS(heat(s, std_normal, -1, rng));

  int inside = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    Rng r = Rng::split(7, t, "heat");
    auto h = heat(make_kernel(Point{50.0}, std_normal), std_normal, 300, r);
    inside += std::abs(h.position[0]) < 5.0;
  }
  CHECK(inside >= 0.99 * trials);
}

TEST_CASE("identical seeds give identical trajectories") {
  auto run = [] {
    Rng rng(8);
    auto s = make_kernel(Point{0.0}, std_normal);
    std::vector<double> path;
    for (int i = 0; i < 500; ++i) {
      s = mh_step(std::move(s), std_normal, rng);
      path.push_back(s.position[0]);
    }
    return path;
  };
  CHECK(run() == run());
}

TEST_CASE("nearest-neighbour chain matches discrete weights") {
  const auto problem = make_discrete_problem({1, 2, 3, 4, 2}, {1, 1, 1, 1, 2});
  Rng rng(9);
  auto s = make_kernel(Point{0.0}, problem.f0().eval, MoveKind::NearestNeighbor);
  std::vector<double> counts(5, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    s = mh_step(std::move(s), problem.f0().eval, rng);
    counts[static_cast<std::size_t>(s.position[0])] += 1.0;
  }
  const double total = 12.0;
  const double w[] = {1, 2, 3, 4, 2};
  double tv = 0.0;
  for (int k = 0; k < 5; ++k) tv += 0.5 * std::abs(counts[k] / n - w[k] / total);
  CHECK(tv < 0.02);
}

TEST_CASE("mixture_draw: fair coin, both chains move, mixture mean") {
  const auto problem = make_gaussian_shift_problem(5.0);
  Rng rng(10);
  DualChain chains = heat(make_dual_chain(problem, Point{0.0}), problem, 300, rng);
  int zeros = 0;
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto before0 = chains.chain0.step_count, before1 = chains.chain1.step_count;
    auto d = mixture_draw(std::move(chains), problem, rng);
    chains = std::move(d.chains);
    REQUIRE(chains.chain0.step_count == before0 + 1);
    REQUIRE(chains.chain1.step_count == before1 + 1);
    zeros += d.component == 0;
    sum += d.z[0];
  }
  CHECK(double(zeros) / n >= 0.47);
  CHECK(double(zeros) / n <= 0.53);
  CHECK(std::abs(sum / n - 2.5) < 0.15);
}

TEST_CASE("mixture of identical components is marginally p0") {
  const auto problem = make_gaussian_shift_problem(0.0);
  Rng rng(12);
  DualChain chains = heat(make_dual_chain(problem, Point{0.0}), problem, 300, rng);
  double s = 0.0, ss = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    auto d = mixture_draw(std::move(chains), problem, rng);
    chains = std::move(d.chains);
    s += d.z[0];
    ss += d.z[0] * d.z[0];
  }
  CHECK(std::abs(s / n) < 0.1);
  CHECK(std::abs(ss / n - 1.0) < 0.1);
}

TEST_CASE("exact samplers") {
  Rng rng(13);
  const auto discrete = make_discrete_problem({1, 3}, {2, 1});
  const auto ds = exact_sampler_for(discrete);
  REQUIRE(ds);
  int ones = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ones += ds->draw_component(0, rng)[0] == 1.0;
  CHECK(std::abs(double(ones) / n - 0.75) < 0.01);

  const auto gauss = make_gaussian_shift_problem(1.0);
  const auto gs = exact_sampler_for(gauss);
  REQUIRE(gs);
  double s = 0.0;
  int labels = 0;
  for (int i = 0; i < n; ++i) {
    int c = 0;
    s += gs->draw_fixed_mixture(rng, &c)[0];
    labels += c;
  }
  CHECK(std::abs(s / n - 0.5) < 0.02);
  CHECK(std::abs(double(labels) / n - 0.5) < 0.01);

  const RatioProblem generic(LogDensity{std_normal, 1}, LogDensity{std_normal, 1});
  CHECK_FALSE(exact_sampler_for(generic).has_value());
}

TEST_CASE("exact proposal draws follow pi_r on a discrete fixture") {
  const auto problem = make_discrete_problem({1, 2, 5}, {3, 1, 1});
  const auto sampler = *exact_sampler_for(problem);
  Rng rng(14);
  const double r = 2.0;
  for (const auto& fam : {ProposalFamily::mixt(), ProposalFamily::opt()}) {
    std::vector<double> want(3), counts(3, 0.0);
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      want[k] = std::exp(log_unnorm_proposal(fam, problem, r, Point{double(k)}));
      total += want[k];
    }
    const int n = 100000;
    for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(sampler.draw_proposal(fam, r, rng)[0])] += 1;
    for (int k = 0; k < 3; ++k) CHECK(std::abs(counts[k] / n - want[k] / total) < 0.01);
  }
}
