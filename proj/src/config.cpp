#include "saris/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "saris/rng.hpp"

namespace saris {

using nlohmann::json;

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::GaussianCompare: return "gaussian-compare";
    case ExperimentKind::MuSweep: return "mu-sweep";
    case ExperimentKind::Joint: return "joint";
    case ExperimentKind::PsiReport: return "psi-report";
    case ExperimentKind::SingleMarginal: return "single-marginal";
    case ExperimentKind::DiscreteOracle: return "discrete-oracle";
  }
  return "?";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::GaussianCompare, ExperimentKind::MuSweep, ExperimentKind::Joint,
                 ExperimentKind::PsiReport, ExperimentKind::SingleMarginal,
                 ExperimentKind::DiscreteOracle})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

bool is_known_estimator(std::string_view name) {
  return std::find(std::begin(kEstimatorNames), std::end(kEstimatorNames), name) !=
         std::end(kEstimatorNames);
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.estimators.assign(std::begin(kEstimatorNames), std::end(kEstimatorNames));
  switch (kind) {
    case ExperimentKind::MuSweep:
      c.mu_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
      c.estimators = {"BRIDGE-OPT", "SARIS-EXT-opt"};
      break;
    case ExperimentKind::PsiReport: c.mu_grid = {0.5, 1, 2, 5}; break;
    case ExperimentKind::Joint: c.n_reps = 20; break;
    case ExperimentKind::SingleMarginal: c.n_reps = 20; break;
    default: break;
  }
  c.out = std::string(to_string(kind)) + (kind == ExperimentKind::PsiReport ? ".json" : ".csv");
  return c;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config key '" + path + "': " + what);
}

std::int64_t get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  fail(path, "expected a nonnegative integer");
}

double get_double(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_doubles(const json& v, const std::string& path, std::size_t exact = 0) {
  if (!v.is_array()) fail(path, "expected a list of numbers");
  if (exact && v.size() != exact) fail(path, "expected " + std::to_string(exact) + " entries");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(get_double(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::string> get_strings(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected a list of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(get_string(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

int get_small_int(const json& v, const std::string& path) {
  const auto x = get_int(v, path);
  if (x < INT32_MIN || x > INT32_MAX) fail(path, "out of range");
  return static_cast<int>(x);
}

std::size_t get_size(const json& v, const std::string& path) {
  const auto x = get_int(v, path);
  if (x < 0) fail(path, "must be nonnegative");
  return static_cast<std::size_t>(x);
}

void apply(ExperimentConfig& c, const std::string& key, const json& v) {
  const std::string& p = key;
  if (key == "experiment") {
    const auto name = get_string(v, p);
    if (name != to_string(c.experiment))
      fail(p, "'" + name + "' does not match subcommand '" + to_string(c.experiment) + "'");
  } else if (key == "mu") {
    c.mu = get_double(v, p);
  } else if (key == "mu_grid") {
    c.mu_grid = get_doubles(v, p);
  } else if (key == "K") {
    c.K = get_int(v, p);
  } else if (key == "K_heat") {
    c.K_heat = get_int(v, p);
  } else if (key == "average_burn") {
    c.average_burn = get_int(v, p);
  } else if (key == "n_reps" || key == "reps") {
    c.n_reps = get_small_int(v, p);
  } else if (key == "seed") {
    c.seed = get_u64(v, p);
  } else if (key == "threads") {
    c.threads = get_small_int(v, p);
  } else if (key == "step_a") {
    c.schedule.a = get_double(v, p);
  } else if (key == "step_b") {
    c.schedule.b = get_double(v, p);
  } else if (key == "step_epsilon") {
    c.schedule.epsilon = get_double(v, p);
  } else if (key == "step_heat_value") {
    c.schedule.heat_value = get_double(v, p);
  } else if (key == "estimators") {
    c.estimators = get_strings(v, p);
    for (std::size_t i = 0; i < c.estimators.size(); ++i)
      if (!is_known_estimator(c.estimators[i]))
        fail(p + "[" + std::to_string(i) + "]", "unknown estimator '" + c.estimators[i] + "'");
  } else if (key == "share_chains") {
    c.share_chains = get_bool(v, p);
  } else if (key == "quad_nodes") {
    c.quad_nodes = get_small_int(v, p);
  } else if (key == "n_fixtures") {
    c.n_fixtures = get_small_int(v, p);
  } else if (key == "support_min") {
    c.support_min = get_small_int(v, p);
  } else if (key == "support_max") {
    c.support_max = get_small_int(v, p);
  } else if (key == "out") {
    c.out = get_string(v, p);
  } else if (key == "theta_out") {
    c.theta_out = get_string(v, p);
  } else if (key == "n") {
    c.joint.n = get_size(v, p);
  } else if (key == "r_missing") {
    c.joint.r_missing = get_size(v, p);
  } else if (key == "K_joint") {
    c.joint.K_joint = get_int(v, p);
  } else if (key == "joint_gain") {
    c.joint.gain = get_double(v, p);
  } else if (key == "normalize_gradient") {
    c.joint.normalize_gradient = get_bool(v, p);
  } else if (key == "beta") {
    const auto b = get_doubles(v, p, 3);
    c.joint.truth.beta0 = b[0];
    c.joint.truth.beta1 = b[1];
    c.joint.truth.beta2 = b[2];
  } else if (key == "mu_x") {
    const auto m = get_doubles(v, p, 2);
    c.joint.truth.mu1 = m[0];
    c.joint.truth.mu2 = m[1];
  } else if (key == "gamma_x_sq") {
    const auto g = get_doubles(v, p, 2);
    c.joint.truth.gamma1_sq = g[0];
    c.joint.truth.gamma2_sq = g[1];
  } else if (key == "sigma2") {
    c.joint.truth.sigma2 = get_double(v, p);
  } else {
    fail(p, "unknown key");
  }
}

json parse_object(std::string_view text, const char* what) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object at top level");
  return j;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  auto bad = [](const char* key, const std::string& what) { fail(key, what); };
  if (c.K <= 0) bad("K", "must be positive");
  if (c.K_heat < 0) bad("K_heat", "must be nonnegative");
  if (c.average_burn && *c.average_burn < 0) bad("average_burn", "must be nonnegative");
  if (c.n_reps < 1) bad("n_reps", "must be at least 1");
  if (c.threads < 0) bad("threads", "must be nonnegative");
  if (c.estimators.empty()) bad("estimators", "must not be empty");
  for (std::size_t i = 0; i < c.estimators.size(); ++i)
    if (!is_known_estimator(c.estimators[i]))
      fail("estimators[" + std::to_string(i) + "]", "unknown estimator '" + c.estimators[i] + "'");
  try {
    c.schedule.validate();
  } catch (const std::invalid_argument& e) {
    bad("step_*", e.what());
  }
  if (!std::isfinite(c.mu)) bad("mu", "must be finite");
  if ((c.experiment == ExperimentKind::MuSweep || c.experiment == ExperimentKind::PsiReport) &&
      c.mu_grid.empty())
    bad("mu_grid", "must not be empty");
  for (double m : c.mu_grid)
    if (!std::isfinite(m)) bad("mu_grid", "entries must be finite");
  if (c.quad_nodes < 3) bad("quad_nodes", "must be at least 3");
  if (c.n_fixtures < 1) bad("n_fixtures", "must be at least 1");
  if (c.support_min < 2 || c.support_max < c.support_min)
    bad("support_min", "need 2 <= support_min <= support_max");
  if (c.joint.n < 2) bad("n", "must be at least 2");
  if (c.joint.r_missing >= c.joint.n) bad("r_missing", "must be smaller than n");
  if (c.joint.K_joint < 0) bad("K_joint", "must be nonnegative");
  if (!(c.joint.gain > 0.0)) bad("joint_gain", "must be positive");
  if (!(c.joint.truth.sigma2 > 0.0)) bad("sigma2", "must be positive");
  if (!(c.joint.truth.gamma1_sq > 0.0) || !(c.joint.truth.gamma2_sq > 0.0))
    bad("gamma_x_sq", "entries must be positive");
  if (c.out.empty()) bad("out", "must not be empty");
}

ExperimentConfig parse_config_text(ExperimentKind kind, std::string_view file_text,
                                   std::string_view overrides_json) {
  ExperimentConfig c = default_config(kind);
  const json file = parse_object(file_text, "config file");
  const json flags = parse_object(overrides_json, "flags");
  for (const auto& [key, value] : file.items()) apply(c, key, value);
  for (const auto& [key, value] : flags.items()) apply(c, key, value);
  c.schedule.k_heat = c.K_heat;
  validate(c);
  return c;
}

ExperimentConfig parse_config(ExperimentKind kind, const std::optional<std::string>& path,
                              std::string_view overrides_json) {
  std::string text;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file '" + *path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config_text(kind, text, overrides_json);
}

std::string canonical_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(c.experiment);
  j["mu"] = c.mu;
  j["mu_grid"] = c.mu_grid;
  j["K"] = c.K;
  j["K_heat"] = c.K_heat;
  j["average_burn"] = c.burn();
  j["n_reps"] = c.n_reps;
  j["seed"] = c.seed;
  j["step_a"] = c.schedule.a;
  j["step_b"] = c.schedule.b;
  j["step_epsilon"] = c.schedule.epsilon;
  j["step_heat_value"] = c.schedule.heat_value;
  j["estimators"] = c.estimators;
  j["share_chains"] = c.share_chains;
  j["quad_nodes"] = c.quad_nodes;
  j["n_fixtures"] = c.n_fixtures;
  j["support_min"] = c.support_min;
  j["support_max"] = c.support_max;
  j["n"] = c.joint.n;
  j["r_missing"] = c.joint.r_missing;
  j["K_joint"] = c.joint.K_joint;
  j["joint_gain"] = c.joint.gain;
  j["normalize_gradient"] = c.joint.normalize_gradient;
  j["beta"] = {c.joint.truth.beta0, c.joint.truth.beta1, c.joint.truth.beta2};
  j["mu_x"] = {c.joint.truth.mu1, c.joint.truth.mu2};
  j["gamma_x_sq"] = {c.joint.truth.gamma1_sq, c.joint.truth.gamma2_sq};
  j["sigma2"] = c.joint.truth.sigma2;
  // threads and output paths do not affect results and stay out of the hash.
  return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_json(config))));
  return buf;
}

}  // namespace saris
