#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "saris/config.hpp"
#include "saris/density.hpp"
#include "saris/diagnostics.hpp"
#include "saris/joint.hpp"
#include "saris/mc.hpp"
#include "saris/rng.hpp"
#include "saris/samplers.hpp"
#include "saris/schedule.hpp"

namespace saris {

/// Exit codes of the command-line runners.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitEstimation = 3;

/// Per-replication draw budget and SA settings shared by the five estimators.
struct CompareSettings {
  std::int64_t K = 5000;
  std::int64_t K_heat = 300;
  StepSchedule schedule;  // k_heat should equal K_heat
  std::int64_t average_burn = 300;
  MoveKind move = MoveKind::GaussianWalk;
};

CompareSettings compare_settings(const ExperimentConfig& config);

/// p0 / p1 chains, heated K_heat steps each, followed by K draws each.
struct ChainDraws {
  std::vector<Point> draws0;
  std::vector<Point> draws1;
};
ChainDraws draw_two_chains(const RatioProblem& problem, const CompareSettings& settings, Rng& rng);

struct EstimatorOutcome {
  std::string estimator;
  double log_r_hat = 0.0;
  bool failed = false;
  std::string failure;
  std::int64_t draws = 0;       // post-heat draws carrying f0 / f1 evaluations
  std::int64_t heat_draws = 0;  // draws spent heating samplers
  std::optional<BridgeResult> bridge;

  std::int64_t budget() const { return draws + heat_draws; }
};

/// Runs one named estimator with the budget 2K + 2K_heat. When `shared` is
/// given, BRIDGE-OPT, RIS-MIXT and SARIS-MIXT reuse those chain draws.
EstimatorOutcome run_estimator(std::string_view name, const RatioProblem& problem,
                               const CompareSettings& settings, Rng& rng,
                               const ChainDraws* shared = nullptr);

/// Stream label for one (mu, estimator) cell; seeds never depend on run order.
std::string stream_label(double mu, std::string_view estimator);

struct CompareRow {
  int rep = 0;
  std::string estimator;
  double mu = 0.0;
  std::int64_t K = 0;
  EstimatorOutcome outcome;
};

/// Every (mu, rep, estimator) cell for the listed mus, in that order.
std::vector<CompareRow> run_compare_grid(const ExperimentConfig& config,
                                         const std::vector<double>& mus);
std::vector<CompareRow> run_gaussian_compare(const ExperimentConfig& config);
std::vector<CompareRow> run_mu_sweep(const ExperimentConfig& config);

/// Header "rep,estimator,mu,K,log_r_hat"; failed cells print nan.
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);

struct SweepSummaryRow {
  double mu = 0.0;
  std::string estimator;
  ReplicationStats stats;
};
std::vector<SweepSummaryRow> summarize_sweep(const ExperimentConfig& config,
                                             const std::vector<CompareRow>& rows);
/// Header "mu,estimator,mean,sd,n_reps"; n_reps counts successful replications.
void write_sweep_csv(std::ostream& out, const std::vector<SweepSummaryRow>& rows);

struct JointTracePoint {
  std::int64_t k = 0;
  double minus2g = 0.0;
  double exact_lr = 0.0;
  Theta theta0;
  Theta theta1;
  double sq_err() const { return (minus2g - exact_lr) * (minus2g - exact_lr); }
};

struct JointRun {
  int rep = 0;
  std::vector<JointTracePoint> trace;  // k = 0 .. K_joint (shorter on failure)
  bool failed = false;
  std::string failure;
};

std::vector<JointRun> run_joint(const ExperimentConfig& config);
/// Header "rep,k,minus2g,exact_lr,sq_err".
void write_joint_csv(std::ostream& out, const std::vector<JointRun>& runs);
/// Header "rep,k,theta0.beta0,...,theta1.gamma2_sq".
void write_joint_theta_csv(std::ostream& out, const std::vector<JointRun>& runs);

struct PsiRow {
  double mu = 0.0;
  VarianceReport report;
};
std::vector<PsiRow> run_psi_report(const ExperimentConfig& config);
/// {"rows": [{mu, psi, ...}], "psi_monotone_decreasing": bool}; monotonicity
/// is judged over |mu| in grid order.
std::string psi_report_json(const std::vector<PsiRow>& rows);

struct SingleMarginalRow {
  int rep = 0;
  double estimate = 0.0;
  double truth = 0.0;
};
std::vector<SingleMarginalRow> run_single_marginal(const ExperimentConfig& config);
/// Header "rep,estimate,truth".
void write_single_marginal_csv(std::ostream& out, const std::vector<SingleMarginalRow>& rows);

struct DiscreteOracleRow {
  int fixture = 0;
  std::size_t n = 0;
  double true_log_ratio = 0.0;
  double estimate = 0.0;
  double abs_err = 0.0;
  bool failed = false;
};
/// Random positive-weight fixture `index` (support size in [support_min, support_max]).
RatioProblem random_discrete_fixture(const ExperimentConfig& config, int index);
/// SARIS in log mode with exact Mixt sampling at the current ratio, K iterations per fixture.
std::vector<DiscreteOracleRow> run_discrete_oracle(const ExperimentConfig& config);
/// Header "fixture,n,true_log_ratio,estimate,abs_err".
void write_discrete_oracle_csv(std::ostream& out, const std::vector<DiscreteOracleRow>& rows);

/// Runs `count` independent tasks on up to `threads` workers (0: hardware
/// concurrency). Each task writes only its own slot, so results do not
/// depend on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task);

/// Runs the configured experiment, writes config.out and `<out>.meta.json`
/// (plus the per-replication sweep file or theta trace where applicable) and
/// returns kExitOk or kExitEstimation. Progress lines go to `log`.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace saris
