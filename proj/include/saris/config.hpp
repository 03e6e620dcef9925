#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "saris/joint.hpp"
#include "saris/schedule.hpp"

namespace saris {

enum class ExperimentKind { GaussianCompare, MuSweep, Joint, PsiReport, SingleMarginal, DiscreteOracle };

const char* to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

inline constexpr std::string_view kEstimatorNames[] = {"BRIDGE-OPT", "RIS-MIXT", "SARIS-MIXT",
                                                        "SARIS-EXT-opt", "SARIS-EXT-mixt"};
bool is_known_estimator(std::string_view name);

struct JointConfig {
  std::size_t n = 200;
  std::size_t r_missing = 20;
  std::int64_t K_joint = 250;
  double gain = 0.1;
  bool normalize_gradient = true;
  ModelParams truth;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::GaussianCompare;
  double mu = 1.0;
  std::vector<double> mu_grid;
  std::int64_t K = 5000;
  std::int64_t K_heat = 300;
  std::optional<std::int64_t> average_burn;  // defaults to K_heat
  int n_reps = 50;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: one per hardware thread
  StepSchedule schedule;  // k_heat mirrors K_heat
  std::vector<std::string> estimators;
  JointConfig joint;
  bool share_chains = false;
  int quad_nodes = 4097;
  int n_fixtures = 20;
  int support_min = 3;
  int support_max = 10;
  std::string out;
  std::string theta_out;

  std::int64_t burn() const { return average_burn.value_or(K_heat); }
};

/// Raised for malformed configuration; the message names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Defaults for one experiment before any file or flag is applied.
ExperimentConfig default_config(ExperimentKind kind);

/// Builds a config from JSON text of a file (may be empty) and a JSON object
/// of flag overrides; flags win over the file. Unknown keys, type mismatches
/// and invalid values raise ConfigError.
ExperimentConfig parse_config_text(ExperimentKind kind, std::string_view file_text,
                                   std::string_view overrides_json = "{}");

/// Same, reading the file at `path` when given.
ExperimentConfig parse_config(ExperimentKind kind, const std::optional<std::string>& path,
                              std::string_view overrides_json = "{}");

void validate(const ExperimentConfig& config);

/// Canonical JSON of every resolved field, in a fixed key order.
std::string canonical_json(const ExperimentConfig& config);

/// FNV-1a of canonical_json, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace saris
