#include "saris/joint.hpp"

#include <cmath>
#include <stdexcept>

#include "saris/logmath.hpp"

namespace saris {

void RegressionData::validate() const {
  const std::size_t n = y.size();
  if (x1.size() != n || x2.size() != n)
    throw std::invalid_argument("RegressionData: column lengths differ");
  if (n == 0 || n_missing >= n) throw std::invalid_argument("RegressionData: need 0 <= r < n");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("RegressionData: sigma2 must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y[i]) || !std::isfinite(x1[i]))
      throw std::invalid_argument("RegressionData: observed entries must be finite");
    if (i >= n_missing && !std::isfinite(x2[i]))
      throw std::invalid_argument("RegressionData: observed x2 must be finite");
  }
}

void Theta::validate() const {
  if (!(gamma1_sq > 0.0) || !(gamma2_sq > 0.0))
    throw std::invalid_argument("Theta: variance components must be positive");
}

ThetaVector to_unconstrained(const Theta& t) {
  return {t.beta0, t.beta1, t.beta2, t.mu1, t.mu2, std::log(t.gamma1_sq), std::log(t.gamma2_sq)};
}

Theta from_unconstrained(const ThetaVector& u) {
  return {u[0], u[1], u[2], u[3], u[4], std::exp(u[5]), std::exp(u[6])};
}

namespace {

double x2_at(const RegressionData& data, const std::vector<double>& fill, std::size_t i) {
  return i < data.n_missing ? fill[i] : data.x2[i];
}

void check_fill(const RegressionData& data, const std::vector<double>& fill) {
  if (fill.size() != data.n_missing)
    throw std::invalid_argument("fill length must equal the number of missing rows");
}

}  // namespace

double complete_loglik(const Theta& theta, const RegressionData& data,
                       const std::vector<double>& fill) {
  theta.validate();
  check_fill(data, fill);
  double l = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double x2 = x2_at(data, fill, i);
    const double mean = theta.beta0 + theta.beta1 * data.x1[i] + theta.beta2 * x2;
    l += log_normal_pdf(data.y[i], mean, data.sigma2) +
         log_normal_pdf(data.x1[i], theta.mu1, theta.gamma1_sq) +
         log_normal_pdf(x2, theta.mu2, theta.gamma2_sq);
  }
  return l;
}

ThetaVector complete_loglik_grad(const Theta& theta, const RegressionData& data,
                                 const std::vector<double>& fill, Hypothesis hypothesis) {
  theta.validate();
  check_fill(data, fill);
  ThetaVector g{};
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double x1 = data.x1[i];
    const double x2 = x2_at(data, fill, i);
    const double e = (data.y[i] - theta.beta0 - theta.beta1 * x1 - theta.beta2 * x2) / data.sigma2;
    const double d1 = x1 - theta.mu1;
    const double d2 = x2 - theta.mu2;
    g[0] += e;
    g[1] += e * x1;
    g[2] += e * x2;
    g[3] += d1 / theta.gamma1_sq;
    g[4] += d2 / theta.gamma2_sq;
    g[5] += 0.5 * (d1 * d1 / theta.gamma1_sq - 1.0);
    g[6] += 0.5 * (d2 * d2 / theta.gamma2_sq - 1.0);
  }
  if (hypothesis == Hypothesis::H0) g[0] = 0.0;
  return g;
}

GaussianParams posterior_x2_params(const Theta& theta, double y, double x1, double sigma2) {
  const double precision = 1.0 / theta.gamma2_sq + theta.beta2 * theta.beta2 / sigma2;
  const double variance = 1.0 / precision;
  const double mean = variance * (theta.mu2 / theta.gamma2_sq +
                                  theta.beta2 * (y - theta.beta0 - theta.beta1 * x1) / sigma2);
  return {mean, variance};
}

double exact_marginal_loglik(const Theta& theta, const RegressionData& data) {
  theta.validate();
  double l = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double x1 = data.x1[i];
    l += log_normal_pdf(x1, theta.mu1, theta.gamma1_sq);
    if (i < data.n_missing) {
      const double mean = theta.beta0 + theta.beta1 * x1 + theta.beta2 * theta.mu2;
      const double var = theta.beta2 * theta.beta2 * theta.gamma2_sq + data.sigma2;
      l += log_normal_pdf(data.y[i], mean, var);
    } else {
      const double x2 = data.x2[i];
      l += log_normal_pdf(data.y[i], theta.beta0 + theta.beta1 * x1 + theta.beta2 * x2,
                          data.sigma2) +
           log_normal_pdf(x2, theta.mu2, theta.gamma2_sq);
    }
  }
  return l;
}

JointState init_state(const RegressionData& data) {
  data.validate();
  auto moments = [](const std::vector<double>& xs, std::size_t from) {
    double s = 0.0, ss = 0.0;
    const double n = static_cast<double>(xs.size() - from);
    for (std::size_t i = from; i < xs.size(); ++i) s += xs[i];
    const double mean = s / n;
    for (std::size_t i = from; i < xs.size(); ++i) ss += (xs[i] - mean) * (xs[i] - mean);
    const double var = n > 1.0 ? ss / (n - 1.0) : 1.0;
    return std::pair{mean, var > 0.0 ? var : 1.0};
  };
  const auto [m1, v1] = moments(data.x1, 0);
  const auto [m2, v2] = moments(data.x2, data.n_missing);

  JointState s;
  s.theta1 = Theta{0.0, 0.0, 0.0, m1, m2, v1, v2};
  s.theta0 = s.theta1;
  s.fill0.assign(data.n_missing, m2);
  s.fill1 = s.fill0;
  return s;
}

namespace {

void draw_fill(std::vector<double>& fill, const Theta& theta, const RegressionData& data, Rng& rng) {
  for (std::size_t i = 0; i < data.n_missing; ++i) {
    const auto p = posterior_x2_params(theta, data.y[i], data.x1[i], data.sigma2);
    fill[i] = rng.normal(p.mean, std::sqrt(p.variance));
  }
}

Theta sgd_ascent(const Theta& theta, const RegressionData& data, const std::vector<double>& fill,
                 Hypothesis h, double gain, bool normalize) {
  const ThetaVector grad = complete_loglik_grad(theta, data, fill, h);
  ThetaVector u = to_unconstrained(theta);
  const double scale = normalize ? gain / static_cast<double>(data.n()) : gain;
  for (std::size_t j = 0; j < u.size(); ++j) u[j] += scale * grad[j];
  if (h == Hypothesis::H0) u[0] = 0.0;
  return from_unconstrained(u);
}

}  // namespace

JointState joint_step(JointState state, const RegressionData& data, const StepSchedule& schedule,
                      Rng& rng, const JointOptions& options) {
  if (state.failed) return state;
  const double gain = gamma(schedule, state.k + 1);

  draw_fill(state.fill0, state.theta0, data, rng);
  draw_fill(state.fill1, state.theta1, data, rng);

  const Theta next0 =
      sgd_ascent(state.theta0, data, state.fill0, Hypothesis::H0, gain, options.normalize_gradient);
  const Theta next1 =
      sgd_ascent(state.theta1, data, state.fill1, Hypothesis::H1, gain, options.normalize_gradient);

  const auto& pick = rng.coin() ? state.fill1 : state.fill0;
  double l0 = 0.0, l1 = 0.0;
  try {
    l0 = complete_loglik(next0, data, pick);
    l1 = complete_loglik(next1, data, pick);
  } catch (const std::invalid_argument& e) {
    state.failed = true;
    state.failure = std::string("invalid parameters: ") + e.what();
    return state;
  }
  if (!std::isfinite(l0) || !std::isfinite(l1)) {
    state.failed = true;
    state.failure = "non-finite log-likelihood at k=" + std::to_string(state.k + 1);
    return state;
  }
  state.theta0 = next0;
  state.theta1 = next1;
  state.g += gain * std::tanh(0.5 * (l0 - l1 - state.g));
  ++state.k;
  return state;
}

std::vector<double> exact_lr_trace(const std::vector<std::pair<Theta, Theta>>& states,
                                   const RegressionData& data) {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& [t0, t1] : states)
    out.push_back(-2.0 * (exact_marginal_loglik(t0, data) - exact_marginal_loglik(t1, data)));
  return out;
}

MomentUpdate adaptive_gaussian_moments(double m, double v, double z, double gain) {
  MomentUpdate u;
  u.m = m + gain * (z - m);
  u.v = v + gain * (z * z - v);
  u.sigma2 = u.v - u.m * u.m;
  if (!(u.sigma2 > 0.0)) {
    u.sigma2 = 1e-8;
    u.clamped = true;
  }
  return u;
}

RegressionData simulate_dataset(const ModelParams& p, std::size_t n, std::size_t n_missing,
                                Rng& rng) {
  if (n_missing >= n) throw std::invalid_argument("simulate_dataset: need r < n");
  RegressionData d;
  d.y.resize(n);
  d.x1.resize(n);
  d.x2.resize(n);
  d.n_missing = n_missing;
  d.sigma2 = p.sigma2;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.normal(p.mu1, std::sqrt(p.gamma1_sq));
    const double x2 = rng.normal(p.mu2, std::sqrt(p.gamma2_sq));
    d.x1[i] = x1;
    d.x2[i] = i < n_missing ? std::nan("") : x2;
    d.y[i] = p.beta0 + p.beta1 * x1 + p.beta2 * x2 + rng.normal(0.0, std::sqrt(p.sigma2));
  }
  return d;
}

SingleMarginalResult estimate_single_marginal(const Theta& theta, const RegressionData& data,
                                              const StepSchedule& schedule,
                                              std::int64_t iterations, std::int64_t burn,
                                              Rng& rng) {
  data.validate();
  theta.validate();
  const std::size_t r = data.n_missing;
  if (r == 0) throw std::invalid_argument("estimate_single_marginal: no missing rows");

  SingleMarginalResult out;
  out.truth = exact_marginal_loglik(theta, data);

  std::vector<double> m(r, theta.mu2), v(r, theta.mu2 * theta.mu2 + theta.gamma2_sq),
      s2(r, theta.gamma2_sq);
  std::vector<double> z(r), pick(r);
  double g = 0.0, avg = 0.0;
  std::int64_t averaged = 0;
  for (std::int64_t k = 0; k < iterations; ++k) {
    draw_fill(z, theta, data, rng);
    const double moment_gain = 1.0 / static_cast<double>(k + 2);
    for (std::size_t i = 0; i < r; ++i) {
      const MomentUpdate u = adaptive_gaussian_moments(m[i], v[i], z[i], moment_gain);
      m[i] = u.m;
      v[i] = u.v;
      s2[i] = u.sigma2;
      out.clamped_updates += u.clamped ? 1 : 0;
    }
    if (rng.coin()) {
      for (std::size_t i = 0; i < r; ++i) pick[i] = rng.normal(m[i], std::sqrt(s2[i]));
    } else {
      pick = z;
    }
    double log_q = 0.0;
    for (std::size_t i = 0; i < r; ++i) log_q += log_normal_pdf(pick[i], m[i], s2[i]);
    const double log_f = complete_loglik(theta, data, pick);
    if (k == 0) g = log_f - log_q;  // one-draw importance weight as the starting point
    g += gamma(schedule, k + 1) * std::tanh(0.5 * (log_f - log_q - g));
    if (k >= burn) {
      ++averaged;
      avg += (g - avg) / static_cast<double>(averaged);
    }
  }
  out.log_estimate = averaged > 0 ? avg : g;
  return out;
}

}  // namespace saris
