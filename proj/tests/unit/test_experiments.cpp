#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "saris/config.hpp"
#include "saris/experiments.hpp"

using namespace saris;

namespace {

ExperimentConfig small_config(ExperimentKind kind, const std::string& extra = "{}") {
  auto c = parse_config_text(kind, R"({"K": 200, "K_heat": 30, "n_reps": 3})", extra);
  return c;
}

std::string compare_csv(const ExperimentConfig& c) {
  std::ostringstream ss;
  write_compare_csv(ss, run_gaussian_compare(c));
  return ss.str();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("every estimator spends 2K + 2K_heat draws") {
  const auto c = small_config(ExperimentKind::GaussianCompare);
  const auto s = compare_settings(c);
  const auto problem = make_gaussian_shift_problem(1.0);
  for (auto name : kEstimatorNames) {
    CAPTURE(name);
    Rng rng(1);
    const auto o = run_estimator(name, problem, s, rng);
    CHECK_FALSE(o.failed);
    CHECK(o.budget() == 2 * c.K + 2 * c.K_heat);
  }
  Rng rng(2);
  const auto shared = draw_two_chains(problem, s, rng);
  CHECK(shared.draws0.size() == static_cast<std::size_t>(c.K));
  for (auto name : {"BRIDGE-OPT", "RIS-MIXT", "SARIS-MIXT"}) {
    CAPTURE(name);
    Rng r(3);
    CHECK(run_estimator(name, problem, s, r, &shared).budget() == 2 * c.K + 2 * c.K_heat);
  }
  Rng bad(4);
  CHECK_THROWS_AS(run_estimator("BRIDGE-NOPE", problem, s, bad), std::invalid_argument);
}

TEST_CASE("shared chains make BRIDGE-OPT independent of its own stream") {
  const auto c = small_config(ExperimentKind::GaussianCompare);
  const auto s = compare_settings(c);
  const auto problem = make_gaussian_shift_problem(1.0);
  Rng rng(5);
  const auto shared = draw_two_chains(problem, s, rng);
  Rng a(6), b(7);
  CHECK(run_estimator("BRIDGE-OPT", problem, s, a, &shared).log_r_hat ==
        run_estimator("BRIDGE-OPT", problem, s, b, &shared).log_r_hat);
}

TEST_CASE("gaussian-compare output is deterministic and independent of thread count") {
  auto c = small_config(ExperimentKind::GaussianCompare);
  c.threads = 1;
  const std::string one = compare_csv(c);
  c.threads = 4;
  const std::string four = compare_csv(c);
  CHECK(one == four);
  CHECK(compare_csv(c) == four);
  CHECK(first_line(one) == "rep,estimator,mu,K,log_r_hat");
  CHECK(line_count(one) == 1 + 3 * 5);

  c.seed = 2;
  CHECK(compare_csv(c) != one);
}

TEST_CASE("a cell's value does not depend on which other estimators run") {
  auto all = small_config(ExperimentKind::GaussianCompare);
  auto only = all;
  only.estimators = {"SARIS-EXT-mixt"};
  const auto a = run_gaussian_compare(all);
  const auto b = run_gaussian_compare(only);
  for (const auto& row : b) {
    bool found = false;
    for (const auto& r : a) {
      if (r.rep == row.rep && r.estimator == row.estimator) {
        CHECK(r.outcome.log_r_hat == row.outcome.log_r_hat);
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("mu-sweep rows and the single-point restriction") {
  auto c = small_config(ExperimentKind::MuSweep, R"({"mu_grid": [1, 3]})");
  const auto rows = run_mu_sweep(c);
  CHECK(rows.size() == 2 * 3 * 2);
  const auto summary = summarize_sweep(c, rows);
  CHECK(summary.size() == 4);
  for (const auto& s : summary) CHECK(s.stats.n_reps == 3);
  std::ostringstream ss;
  write_sweep_csv(ss, summary);
  CHECK(first_line(ss.str()) == "mu,estimator,mean,sd,n_reps");

  auto g = small_config(ExperimentKind::GaussianCompare, R"({"mu": 3})");
  g.estimators = c.estimators;
  const auto single = run_gaussian_compare(g);
  std::size_t matched = 0;
  for (const auto& r : rows) {
    if (r.mu != 3.0) continue;
    for (const auto& s : single)
      if (s.rep == r.rep && s.estimator == r.estimator) {
        CHECK(s.outcome.log_r_hat == r.outcome.log_r_hat);
        ++matched;
      }
  }
  CHECK(matched == 6);
}

TEST_CASE("failed cells print nan") {
  CompareRow row;
  row.estimator = "BRIDGE-OPT";
  row.mu = 2.0;
  row.K = 10;
  row.outcome.failed = true;
  row.outcome.log_r_hat = 1.0;
  std::ostringstream ss;
  write_compare_csv(ss, {row});
  CHECK(ss.str() == "rep,estimator,mu,K,log_r_hat\n0,BRIDGE-OPT,2,10,nan\n");
}

TEST_CASE("joint traces run from k = 0 to K_joint") {
  auto c = parse_config_text(ExperimentKind::Joint, R"({"n_reps": 2, "K_joint": 20, "n": 50, "r_missing": 5})");
  const auto runs = run_joint(c);
  REQUIRE(runs.size() == 2);
  for (const auto& r : runs) {
    CHECK_FALSE(r.failed);
    REQUIRE(r.trace.size() == 21);
    CHECK(r.trace.front().k == 0);
    CHECK(r.trace.front().minus2g == 0.0);
    CHECK(r.trace.back().k == 20);
  }
  std::ostringstream a, b;
  write_joint_csv(a, runs);
  write_joint_theta_csv(b, runs);
  CHECK(first_line(a.str()) == "rep,k,minus2g,exact_lr,sq_err");
  CHECK(first_line(b.str()).rfind("rep,k,theta0.beta0,", 0) == 0);
  CHECK(line_count(a.str()) == 43);
}

TEST_CASE("psi report JSON") {
  auto c = parse_config_text(ExperimentKind::PsiReport, R"({"mu_grid": [0.5, 1, 2, 5]})");
  const auto rows = run_psi_report(c);
  const auto j = nlohmann::json::parse(psi_report_json(rows));
  CHECK(j["rows"].size() == 4);
  CHECK(j["rows"][0]["mu"] == 0.5);
  CHECK(j["rows"][3].contains("v_ext_mixt"));
  CHECK(j["psi_monotone_decreasing"] == true);
  for (const auto& r : rows) CHECK(r.report.identity_ok);

  auto rev = c;
  rev.mu_grid = {1, 0.5};
  CHECK(nlohmann::json::parse(psi_report_json(run_psi_report(rev)))["psi_monotone_decreasing"] == true);
  // Psi depends on |mu| only, so a signed grid is judged by distance.
  rev.mu_grid = {-2, 1, 3};
  CHECK(nlohmann::json::parse(psi_report_json(run_psi_report(rev)))["psi_monotone_decreasing"] == true);
  auto forged = rows;
  forged[2].report.psi = 0.99;
  CHECK(nlohmann::json::parse(psi_report_json(forged))["psi_monotone_decreasing"] == false);
}

TEST_CASE("discrete-oracle fixtures and single-marginal rows") {
  auto c = parse_config_text(ExperimentKind::DiscreteOracle, R"({"n_fixtures": 4, "K": 2000, "K_heat": 0})");
  for (int i = 0; i < 4; ++i) {
    const auto p = random_discrete_fixture(c, i);
    const auto n = discrete_support(p).size();
    CHECK(n >= 3);
    CHECK(n <= 10);
  }
  const auto rows = run_discrete_oracle(c);
  CHECK(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.abs_err == std::abs(r.estimate - r.true_log_ratio));

  auto m = parse_config_text(ExperimentKind::SingleMarginal, R"({"n_reps": 2, "K": 300, "n": 40, "r_missing": 4})");
  const auto sm = run_single_marginal(m);
  CHECK(sm.size() == 2);
  for (const auto& r : sm) CHECK(std::isfinite(r.estimate));
  m.joint.r_missing = 0;
  CHECK_THROWS_AS(run_single_marginal(m), ConfigError);
}

TEST_CASE("run_experiment writes outputs and metadata") {
  std::ostringstream log;
  auto c = small_config(ExperimentKind::MuSweep, R"({"mu_grid": [1, 2], "out": "exp_test_sweep.csv"})");
  CHECK(run_experiment(c, log) == kExitOk);
  CHECK(first_line(slurp("exp_test_sweep.csv")) == "mu,estimator,mean,sd,n_reps");
  CHECK(line_count(slurp("exp_test_sweep.csv.reps.csv")) == 1 + 2 * 3 * 2);
  const auto meta = nlohmann::json::parse(slurp("exp_test_sweep.csv.meta.json"));
  CHECK(meta["experiment"] == "mu-sweep");
  CHECK(meta["config_hash"] == config_hash(c));
  CHECK(meta["failures"] == 0);

  auto bad = c;
  bad.out = "/nonexistent-dir/x.csv";
  CHECK_THROWS(run_experiment(bad, log));
  bad = c;
  bad.K = 0;
  CHECK_THROWS_AS(run_experiment(bad, log), ConfigError);
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) REQUIRE(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no tasks expected"); });
}
