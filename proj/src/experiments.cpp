#include "saris/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "saris/csv.hpp"
#include "saris/logmath.hpp"
#include "saris/sa.hpp"
#include "saris/samplers.hpp"

namespace saris {

CompareSettings compare_settings(const ExperimentConfig& config) {
  CompareSettings s;
  s.K = config.K;
  s.K_heat = config.K_heat;
  s.schedule = config.schedule;
  s.schedule.k_heat = config.K_heat;
  s.average_burn = config.burn();
  return s;
}

ChainDraws draw_two_chains(const RatioProblem& problem, const CompareSettings& s, Rng& rng) {
  const Point origin(std::vector<double>(problem.dim(), 0.0));
  ChainDraws out;
  out.draws0.reserve(static_cast<std::size_t>(s.K));
  out.draws1.reserve(static_cast<std::size_t>(s.K));
  auto run = [&](const LogDensity& f, std::vector<Point>& sink) {
    MhKernelState chain = heat(make_kernel(origin, f.eval, s.move), f.eval, s.K_heat, rng);
    for (std::int64_t k = 0; k < s.K; ++k) {
      chain = mh_step(std::move(chain), f.eval, rng);
      sink.push_back(chain.position);
    }
  };
  run(problem.f0(), out.draws0);
  run(problem.f1(), out.draws1);
  return out;
}

namespace {

EstimatorOutcome saris_outcome(std::string_view name, const RatioProblem& problem,
                               const ProposalFamily& proposal, const SamplerSpec& sampler,
                               std::int64_t iterations, const CompareSettings& s, Rng& rng) {
  SarisOptions options;
  options.average_burn = s.average_burn;
  options.record_path = false;
  const Trace trace = run_saris(problem, proposal, sampler, s.schedule,
                                StoppingRule::fixed_budget(iterations), options, rng);
  EstimatorOutcome o;
  o.estimator = std::string(name);
  o.log_r_hat = trace.log_estimate();
  o.failed = trace.failed;
  o.failure = trace.failure;
  o.draws = trace.draws;
  o.heat_draws = trace.heat_draws;
  return o;
}

}  // namespace

EstimatorOutcome run_estimator(std::string_view name, const RatioProblem& problem,
                               const CompareSettings& s, Rng& rng, const ChainDraws* shared) {
  const Point origin(std::vector<double>(problem.dim(), 0.0));
  EstimatorOutcome o;
  o.estimator = std::string(name);
  try {
    if (name == "BRIDGE-OPT" || name == "RIS-MIXT") {
      const ChainDraws own = shared ? ChainDraws{} : draw_two_chains(problem, s, rng);
      const ChainDraws& d = shared ? *shared : own;
      o.draws = static_cast<std::int64_t>(d.draws0.size() + d.draws1.size());
      o.heat_draws = 2 * s.K_heat;
      if (name == "BRIDGE-OPT") {
        const SampleBank bank = SampleBank::from_draws(problem, d.draws0, d.draws1);
        o.bridge = bridge_optimal(bank);
        o.log_r_hat = o.bridge->log_ratio;
      } else {
        if (!problem.true_log_ratio())
          throw EstimationError("RIS-MIXT needs the ratio that defines the mixture proposal");
        std::vector<Point> pooled = d.draws0;
        pooled.insert(pooled.end(), d.draws1.begin(), d.draws1.end());
        SampleBank bank;
        bank.draws_pi = evaluate_draws(problem, pooled);
        const double log_r = *problem.true_log_ratio();
        const LogDensity pi{[&problem, log_r](const Point& z) {
                              return log_add(problem.f0()(z), log_r + problem.f1()(z));
                            },
                            problem.dim()};
        o.log_r_hat = ris_estimate(bank, pi).log_ratio;
      }
      return o;
    }
    if (name == "SARIS-MIXT") {
      if (shared) {
        EstimatorOutcome r = saris_outcome(name, problem, ProposalFamily::mixt(),
                                           ReplayMixtureDraws{shared->draws0, shared->draws1},
                                           s.K, s, rng);
        r.heat_draws = 2 * s.K_heat;
        return r;
      }
      return saris_outcome(name, problem, ProposalFamily::mixt(),
                           MhMixtureChains{origin, s.K_heat, s.move}, s.K, s, rng);
    }
    if (name == "SARIS-EXT-opt" || name == "SARIS-EXT-mixt") {
      const ProposalFamily proposal =
          name == "SARIS-EXT-opt" ? ProposalFamily::opt() : ProposalFamily::mixt();
      return saris_outcome(name, problem, proposal, MhProposalChain{origin, 2 * s.K_heat, s.move},
                           2 * s.K, s, rng);
    }
    throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    o.failed = true;
    o.failure = e.what();
    o.log_r_hat = std::numeric_limits<double>::quiet_NaN();
    return o;
  }
}

std::string stream_label(double mu, std::string_view estimator) {
  return "mu=" + format_double(mu) + "/" + std::string(estimator);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task) {
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<CompareRow> run_compare_grid(const ExperimentConfig& config,
                                         const std::vector<double>& mus) {
  const CompareSettings settings = compare_settings(config);
  const std::size_t n_est = config.estimators.size();
  const std::size_t per_mu = static_cast<std::size_t>(config.n_reps) * n_est;
  std::vector<CompareRow> rows(mus.size() * per_mu);

  // One task per (mu, rep) so shared chains are drawn once per replication.
  parallel_for(mus.size() * config.n_reps, config.threads, [&](std::size_t task) {
    const std::size_t m = task / config.n_reps;
    const int rep = static_cast<int>(task % config.n_reps);
    const double mu = mus[m];
    const RatioProblem problem = make_gaussian_shift_problem(mu);
    std::optional<ChainDraws> shared;
    if (config.share_chains) {
      Rng rng = Rng::split(config.seed, rep, stream_label(mu, "shared-chains"));
      shared = draw_two_chains(problem, settings, rng);
    }
    for (std::size_t e = 0; e < n_est; ++e) {
      const std::string& name = config.estimators[e];
      Rng rng = Rng::split(config.seed, rep, stream_label(mu, name));
      CompareRow& row = rows[m * per_mu + rep * n_est + e];
      row.rep = rep;
      row.estimator = name;
      row.mu = mu;
      row.K = config.K;
      row.outcome = run_estimator(name, problem, settings, rng, shared ? &*shared : nullptr);
    }
  });
  return rows;
}

std::vector<CompareRow> run_gaussian_compare(const ExperimentConfig& config) {
  return run_compare_grid(config, {config.mu});
}

std::vector<CompareRow> run_mu_sweep(const ExperimentConfig& config) {
  return run_compare_grid(config, config.mu_grid);
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "rep,estimator,mu,K,log_r_hat\n";
  for (const auto& r : rows) {
    out << r.rep << ',' << r.estimator << ',' << format_double(r.mu) << ',' << r.K << ','
        << format_double(r.outcome.failed ? std::nan("") : r.outcome.log_r_hat) << '\n';
  }
}

std::vector<SweepSummaryRow> summarize_sweep(const ExperimentConfig& config,
                                             const std::vector<CompareRow>& rows) {
  std::vector<SweepSummaryRow> out;
  std::vector<double> mus;
  for (const auto& r : rows)
    if (std::find(mus.begin(), mus.end(), r.mu) == mus.end()) mus.push_back(r.mu);
  for (double mu : mus) {
    for (const auto& name : config.estimators) {
      std::vector<double> xs;
      for (const auto& r : rows)
        if (r.mu == mu && r.estimator == name && !r.outcome.failed) xs.push_back(r.outcome.log_r_hat);
      SweepSummaryRow s;
      s.mu = mu;
      s.estimator = name;
      if (xs.empty()) {
        s.stats.mean = s.stats.sd = std::nan("");
      } else {
        s.stats = replication_stats(xs, 0.0);
      }
      out.push_back(s);
    }
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepSummaryRow>& rows) {
  out << "mu,estimator,mean,sd,n_reps\n";
  for (const auto& r : rows) {
    out << format_double(r.mu) << ',' << r.estimator << ',' << format_double(r.stats.mean) << ','
        << format_double(r.stats.sd) << ',' << r.stats.n_reps << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<JointRun> run_joint(const ExperimentConfig& config) {
  const JointConfig& jc = config.joint;
  std::vector<JointRun> runs(static_cast<std::size_t>(config.n_reps));
  parallel_for(runs.size(), config.threads, [&](std::size_t i) {
    const int rep = static_cast<int>(i);
    Rng data_rng = Rng::split(config.seed, rep, "joint/dataset");
    Rng rng = Rng::split(config.seed, rep, "joint/procedure");
    const RegressionData data = simulate_dataset(jc.truth, jc.n, jc.r_missing, data_rng);
    const StepSchedule schedule = StepSchedule::constant(jc.gain);
    JointOptions options;
    options.normalize_gradient = jc.normalize_gradient;

    JointRun& run = runs[i];
    run.rep = rep;
    JointState state = init_state(data);
    auto record = [&] {
      const double lr =
          -2.0 * (exact_marginal_loglik(state.theta0, data) - exact_marginal_loglik(state.theta1, data));
      run.trace.push_back({state.k, state.lr_estimate(), lr, state.theta0, state.theta1});
    };
    record();
    for (std::int64_t k = 0; k < jc.K_joint; ++k) {
      state = joint_step(std::move(state), data, schedule, rng, options);
      if (state.failed) {
        run.failed = true;
        run.failure = state.failure;
        break;
      }
      record();
    }
  });
  return runs;
}

void write_joint_csv(std::ostream& out, const std::vector<JointRun>& runs) {
  out << "rep,k,minus2g,exact_lr,sq_err\n";
  for (const auto& run : runs)
    for (const auto& p : run.trace)
      out << run.rep << ',' << p.k << ',' << format_double(p.minus2g) << ','
          << format_double(p.exact_lr) << ',' << format_double(p.sq_err()) << '\n';
}

void write_joint_theta_csv(std::ostream& out, const std::vector<JointRun>& runs) {
  out << "rep,k";
  for (const char* h : {"theta0", "theta1"})
    for (const char* f : {"beta0", "beta1", "beta2", "mu1", "mu2", "gamma1_sq", "gamma2_sq"})
      out << ',' << h << '.' << f;
  out << '\n';
  auto put = [&](const Theta& t) {
    for (double v : {t.beta0, t.beta1, t.beta2, t.mu1, t.mu2, t.gamma1_sq, t.gamma2_sq})
      out << ',' << format_double(v);
  };
  for (const auto& run : runs) {
    for (const auto& p : run.trace) {
      out << run.rep << ',' << p.k;
      put(p.theta0);
      put(p.theta1);
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<PsiRow> run_psi_report(const ExperimentConfig& config) {
  std::vector<PsiRow> rows(config.mu_grid.size());
  parallel_for(rows.size(), config.threads, [&](std::size_t i) {
    const RatioProblem problem = make_gaussian_shift_problem(config.mu_grid[i]);
    rows[i] = {config.mu_grid[i],
               variance_identity_check(problem, default_integrator(problem, config.quad_nodes))};
  });
  return rows;
}

std::string psi_report_json(const std::vector<PsiRow>& rows) {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    auto item = nlohmann::ordered_json::parse(to_json(r.report));
    nlohmann::ordered_json row;
    row["mu"] = r.mu;
    for (auto it = item.begin(); it != item.end(); ++it) row[it.key()] = it.value();
    j["rows"].push_back(row);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const bool further = std::abs(rows[i].mu) >= std::abs(rows[i - 1].mu);
    if (further ? rows[i].report.psi > rows[i - 1].report.psi
                : rows[i].report.psi < rows[i - 1].report.psi)
      monotone = false;
  }
  j["psi_monotone_decreasing"] = monotone;
  return j.dump(2);
}

// ---------------------------------------------------------------------------

std::vector<SingleMarginalRow> run_single_marginal(const ExperimentConfig& config) {
  const JointConfig& jc = config.joint;
  if (jc.r_missing == 0) throw ConfigError("config key 'r_missing': single-marginal needs r_missing > 0");
  std::vector<SingleMarginalRow> rows(static_cast<std::size_t>(config.n_reps));
  const Theta theta{jc.truth.beta0,     jc.truth.beta1, jc.truth.beta2,   jc.truth.mu1,
                    jc.truth.mu2,       jc.truth.gamma1_sq, jc.truth.gamma2_sq};
  parallel_for(rows.size(), config.threads, [&](std::size_t i) {
    const int rep = static_cast<int>(i);
    Rng data_rng = Rng::split(config.seed, rep, "single-marginal/dataset");
    Rng rng = Rng::split(config.seed, rep, "single-marginal/procedure");
    const RegressionData data = simulate_dataset(jc.truth, jc.n, jc.r_missing, data_rng);
    const auto res = estimate_single_marginal(theta, data, config.schedule, config.K, config.burn(), rng);
    rows[i] = {rep, res.log_estimate, res.truth};
  });
  return rows;
}

void write_single_marginal_csv(std::ostream& out, const std::vector<SingleMarginalRow>& rows) {
  out << "rep,estimate,truth\n";
  for (const auto& r : rows)
    out << r.rep << ',' << format_double(r.estimate) << ',' << format_double(r.truth) << '\n';
}

// ---------------------------------------------------------------------------

RatioProblem random_discrete_fixture(const ExperimentConfig& config, int index) {
  Rng rng = Rng::split(config.seed, static_cast<std::uint64_t>(index), "discrete-oracle/fixture");
  const int span = config.support_max - config.support_min + 1;
  const auto n = static_cast<std::size_t>(
      config.support_min + std::min(span - 1, static_cast<int>(rng.uniform() * span)));
  std::vector<double> w0(n), w1(n);
  for (std::size_t i = 0; i < n; ++i) {
    w0[i] = 0.05 + rng.uniform();
    w1[i] = 0.05 + rng.uniform();
  }
  return make_discrete_problem(std::move(w0), std::move(w1));
}

std::vector<DiscreteOracleRow> run_discrete_oracle(const ExperimentConfig& config) {
  std::vector<DiscreteOracleRow> rows(static_cast<std::size_t>(config.n_fixtures));
  parallel_for(rows.size(), config.threads, [&](std::size_t i) {
    const int index = static_cast<int>(i);
    const RatioProblem problem = random_discrete_fixture(config, index);
    Rng rng = Rng::split(config.seed, static_cast<std::uint64_t>(index), "discrete-oracle/saris");
    SarisOptions options;
    options.average_burn = config.burn();
    options.record_path = false;
    const Trace trace = run_saris(problem, ProposalFamily::mixt(),
                                  ExactProposalDraws{*exact_sampler_for(problem)}, config.schedule,
                                  StoppingRule::fixed_budget(config.K), options, rng);
    DiscreteOracleRow& row = rows[i];
    row.fixture = index;
    row.n = discrete_support(problem).size();
    row.true_log_ratio = *problem.true_log_ratio();
    row.estimate = trace.log_estimate();
    row.abs_err = std::abs(row.estimate - row.true_log_ratio);
    row.failed = trace.failed;
  });
  return rows;
}

void write_discrete_oracle_csv(std::ostream& out, const std::vector<DiscreteOracleRow>& rows) {
  out << "fixture,n,true_log_ratio,estimate,abs_err\n";
  for (const auto& r : rows)
    out << r.fixture << ',' << r.n << ',' << format_double(r.true_log_ratio) << ','
        << format_double(r.estimate) << ',' << format_double(r.abs_err) << '\n';
}

// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
  return f;
}

void write_meta(const ExperimentConfig& config, std::size_t failures,
                const std::vector<std::string>& notes) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(config.experiment);
  j["config_hash"] = config_hash(config);
  j["config"] = nlohmann::ordered_json::parse(canonical_json(config));
  j["failures"] = failures;
  j["notes"] = notes;
  auto f = open_out(config.out + ".meta.json");
  f << j.dump(2) << '\n';
}

}  // namespace

int run_experiment(const ExperimentConfig& config, std::ostream& log) {
  validate(config);
  std::size_t failures = 0;
  std::vector<std::string> notes;
  switch (config.experiment) {
    case ExperimentKind::GaussianCompare: {
      const auto rows = run_gaussian_compare(config);
      for (const auto& r : rows) {
        if (!r.outcome.failed) continue;
        ++failures;
        log << "rep " << r.rep << ' ' << r.estimator << " failed: " << r.outcome.failure << '\n';
      }
      auto f = open_out(config.out);
      write_compare_csv(f, rows);
      break;
    }
    case ExperimentKind::MuSweep: {
      const auto rows = run_mu_sweep(config);
      for (const auto& r : rows) {
        if (!r.outcome.failed) continue;
        ++failures;
        log << "mu " << r.mu << " rep " << r.rep << ' ' << r.estimator
            << " failed: " << r.outcome.failure << '\n';
      }
      auto f = open_out(config.out);
      write_sweep_csv(f, summarize_sweep(config, rows));
      auto g = open_out(config.out + ".reps.csv");
      write_compare_csv(g, rows);
      break;
    }
    case ExperimentKind::Joint: {
      const auto runs = run_joint(config);
      for (const auto& r : runs) {
        if (!r.failed) continue;
        ++failures;
        log << "rep " << r.rep << " failed: " << r.failure << '\n';
      }
      auto f = open_out(config.out);
      write_joint_csv(f, runs);
      if (!config.theta_out.empty()) {
        auto g = open_out(config.theta_out);
        write_joint_theta_csv(g, runs);
      }
      notes.push_back("theta init: beta = 0, mu and gamma^2 from observed sample moments, g = 0");
      notes.push_back(config.joint.normalize_gradient ? "SGD gradient divided by n"
                                                      : "SGD gradient not normalized");
      notes.push_back("a fresh dataset is simulated for every replication");
      break;
    }
    case ExperimentKind::PsiReport: {
      const auto rows = run_psi_report(config);
      auto f = open_out(config.out);
      f << psi_report_json(rows) << '\n';
      for (const auto& r : rows)
        if (!r.report.identity_ok) log << "mu " << r.mu << ": variance identity off by " << r.report.max_rel_err << '\n';
      break;
    }
    case ExperimentKind::SingleMarginal: {
      const auto rows = run_single_marginal(config);
      for (const auto& r : rows)
        if (!std::isfinite(r.estimate)) ++failures;
      auto f = open_out(config.out);
      write_single_marginal_csv(f, rows);
      break;
    }
    case ExperimentKind::DiscreteOracle: {
      const auto rows = run_discrete_oracle(config);
      for (const auto& r : rows)
        if (r.failed) ++failures;
      auto f = open_out(config.out);
      write_discrete_oracle_csv(f, rows);
      break;
    }
  }
  write_meta(config, failures, notes);
  log << to_string(config.experiment) << ": wrote " << config.out << " (" << failures
      << " failed replications)\n";
  return failures > 0 ? kExitEstimation : kExitOk;
}

}  // namespace saris
