#include "saris/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "saris/logmath.hpp"

namespace saris {

namespace {

constexpr double kMassTolerance = 1e-6;
constexpr double kLog2 = 0.69314718055994530942;

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double integrate_quadrature(const Quadrature& q, const std::function<double(double)>& f) {
  q.validate();
  const int panels = q.n_nodes - 1;
  const double h = (q.upper - q.lower) / panels;
  std::vector<double> fx(static_cast<std::size_t>(q.n_nodes));
  for (int i = 0; i < q.n_nodes; ++i) fx[i] = f(q.lower + i * h);

  if (q.rule == QuadratureRule::Trapezoid) {
    double s = 0.5 * (fx.front() + fx.back());
    for (int i = 1; i < panels; ++i) s += fx[i];
    return s * h;
  }
  double scale = 0.0;
  for (double v : fx) scale += std::abs(v);
  const double eps = 1e-14 * std::max(scale * h, 1e-300) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double a = q.lower + i * h;
    const double b = (i + 1 == panels) ? q.upper : a + h;
    const double fm = f(0.5 * (a + b));
    const double whole = simpson(a, b, fx[i], fm, fx[i + 1]);
    total += adaptive_simpson(f, a, b, fx[i], fm, fx[i + 1], whole, eps, 20);
  }
  return total;
}

double density_at(const LogDensity& p, double x) { return std::exp(p(Point{x})); }

void check_mass(const LogDensity& p, const Integrator& integrator, const char* name) {
  const double mass = integrate(integrator, [&](double x) { return density_at(p, x); });
  if (1.0 - mass > kMassTolerance)
    throw RangeError(std::string("integration range misses mass of ") + name);
  if (mass - 1.0 > kMassTolerance)
    throw std::invalid_argument(std::string(name) + " does not integrate to one");
}

void check_problem_mass(const RatioProblem& problem, double r_star, double c1,
                        const Integrator& integrator) {
  const double m0 = integrate(integrator, [&](double x) { return density_at(problem.f0(), x); });
  const double m1 = integrate(integrator, [&](double x) { return density_at(problem.f1(), x); });
  if (1.0 - m0 / (r_star * c1) > kMassTolerance || 1.0 - m1 / c1 > kMassTolerance)
    throw RangeError("integration range misses mass of f0 or f1");
}

double rel_err(double a, double b, double scale) {
  const double m = std::max(std::abs(a), std::abs(b));
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<double>::infinity();
  if (m <= 1e-12 * scale) return 0.0;
  return std::abs(a - b) / m;
}

}  // namespace

void Quadrature::validate() const {
  if (!(lower < upper)) throw std::invalid_argument("Quadrature: lower must be < upper");
  if (n_nodes < 3) throw std::invalid_argument("Quadrature: need at least 3 nodes");
}

double integrate(const Integrator& integrator, const std::function<double(double)>& f) {
  if (const auto* q = std::get_if<Quadrature>(&integrator)) return integrate_quadrature(*q, f);
  const auto& d = std::get<DiscreteSupport>(integrator);
  double s = 0.0;
  for (std::size_t k = 0; k < d.size; ++k) s += f(static_cast<double>(k));
  return s;
}

Integrator default_integrator(const RatioProblem& problem, int n_nodes) {
  if (const auto* g = std::get_if<GaussianPairFixture>(&problem.fixture())) {
    const double sd = std::max(g->sd0, g->sd1);
    return Quadrature{std::min(g->mean0, g->mean1) - 10.0 * sd,
                      std::max(g->mean0, g->mean1) + 10.0 * sd, n_nodes,
                      QuadratureRule::AdaptiveSimpson};
  }
  if (const auto* d = std::get_if<DiscreteFixture>(&problem.fixture()))
    return DiscreteSupport{d->weights0.size()};
  throw std::invalid_argument("default_integrator: problem has no closed-form fixture");
}

Integrator refined(const Integrator& integrator) {
  if (const auto* q = std::get_if<Quadrature>(&integrator)) {
    Quadrature r = *q;
    r.n_nodes = 2 * q->n_nodes - 1;
    return r;
  }
  return integrator;
}

NormalizedPair normalized_pair(const RatioProblem& problem) {
  if (const auto* g = std::get_if<GaussianPairFixture>(&problem.fixture())) {
    const GaussianPairFixture fx = *g;
    LogDensity p0{[fx](const Point& z) { return log_normal_pdf(z[0], fx.mean0, fx.sd0 * fx.sd0); }, 1};
    LogDensity p1{[fx](const Point& z) { return log_normal_pdf(z[0], fx.mean1, fx.sd1 * fx.sd1); }, 1};
    return {std::move(p0), std::move(p1), fx.log_c0, fx.log_c1};
  }
  if (std::holds_alternative<DiscreteFixture>(problem.fixture())) {
    LogSumAccumulator c0, c1;
    for (const auto& z : discrete_support(problem)) {
      c0.add(problem.f0()(z));
      c1.add(problem.f1()(z));
    }
    const double lc0 = c0.value(), lc1 = c1.value();
    auto f0 = problem.f0(), f1 = problem.f1();
    LogDensity p0{[f0, lc0](const Point& z) { return f0(z) - lc0; }, 1};
    LogDensity p1{[f1, lc1](const Point& z) { return f1(z) - lc1; }, 1};
    return {std::move(p0), std::move(p1), lc0, lc1};
  }
  throw std::invalid_argument("normalized_pair: problem has no closed-form fixture");
}

double overlap_psi(const LogDensity& p0, const LogDensity& p1, const Integrator& integrator) {
  check_mass(p0, integrator, "p0");
  check_mass(p1, integrator, "p1");
  const double psi = integrate(integrator, [&](double x) {
    const Point z{x};
    const double a = p0(z), b = p1(z);
    if (a == kNegInf || b == kNegInf) return 0.0;
    return std::exp(kLog2 + a + b - log_add(a, b));
  });
  if (psi < -1e-9 || psi > 1.0 + 1e-9) throw std::logic_error("overlap_psi: value outside [0, 1]");
  return std::clamp(psi, 0.0, 1.0);
}

double v_bridge_opt(double psi, double r_star) {
  if (!(psi >= 0.0 && psi <= 1.0)) throw std::invalid_argument("v_bridge_opt: psi outside [0, 1]");
  if (psi == 0.0) return std::numeric_limits<double>::infinity();
  return 4.0 * r_star * r_star * (1.0 / psi - 1.0);
}

double v_bridge_opt_integral(const LogDensity& p0, const LogDensity& p1,
                             const Integrator& integrator, double r_star) {
  const double harmonic = integrate(integrator, [&](double x) {
    const double a = density_at(p0, x), b = density_at(p1, x);
    return (a > 0.0 && b > 0.0) ? 2.0 * a * b / (a + b) : 0.0;
  });
  if (harmonic == 0.0) return std::numeric_limits<double>::infinity();
  return 4.0 * r_star * r_star * (1.0 / harmonic - 1.0);
}

double v_ris_opt(const LogDensity& p0, const LogDensity& p1, const Integrator& integrator,
                 double r_star) {
  const double l1 = integrate(integrator, [&](double x) {
    return std::abs(density_at(p1, x) - density_at(p0, x));
  });
  return r_star * r_star * l1 * l1;
}

double v_saris(const RatioProblem& problem, const ProposalFamily& proposal, double r_star,
               double c1, const Integrator& integrator, SamplingScheme scheme) {
  if (!(r_star > 0.0) || !(c1 > 0.0)) throw std::invalid_argument("v_saris: r* and c1 must be positive");
  check_problem_mass(problem, r_star, c1, integrator);
  const double log_r = std::log(r_star);

  if (scheme == SamplingScheme::FixedMixture) {
    if (proposal.flavor != ProposalFlavor::Mixt)
      throw std::invalid_argument("v_saris: the fixed-mixture scheme uses the Mixt increment");
    const double c0 = r_star * c1;
    // q = 1/2 (p0 + p1); H = tanh((log f0 - log r f1) / 2); dH/dr = -(1 - H^2) / (2 r).
    double mean_h = 0.0, mean_h2 = 0.0, mean_dh = 0.0;
    auto q = [&](const Point& z) {
      return 0.5 * (std::exp(problem.f0()(z)) / c0 + std::exp(problem.f1()(z)) / c1);
    };
    auto h = [&](const Point& z) {
      const double a = problem.f0()(z), b = problem.f1()(z);
      return (a == kNegInf && b == kNegInf) ? 0.0 : std::tanh(0.5 * (a - log_r - b));
    };
    mean_h = integrate(integrator, [&](double x) { const Point z{x}; return q(z) * h(z); });
    mean_h2 = integrate(integrator, [&](double x) {
      const Point z{x};
      const double v = h(z);
      return q(z) * v * v;
    });
    mean_dh = integrate(integrator, [&](double x) {
      const Point z{x};
      const double v = h(z);
      return -q(z) * (1.0 - v * v) / (2.0 * r_star);
    });
    if (mean_dh == 0.0) return std::numeric_limits<double>::infinity();
    return (mean_h2 - mean_h * mean_h) / (mean_dh * mean_dh);
  }

  if (proposal.flavor == ProposalFlavor::Fixed && !proposal.fixed)
    throw std::invalid_argument("v_saris: Fixed proposal without a density");
  auto log_pi = [&](const Point& z, double a, double b) {
    return log_unnorm_proposal(proposal, log_r, a, b, z);
  };
  const double z_pi = integrate(integrator, [&](double x) {
    const Point z{x};
    return std::exp(log_pi(z, problem.f0()(z), problem.f1()(z)));
  });
  const double m = integrate(integrator, [&](double x) {
    const Point z{x};
    const double a = problem.f0()(z), b = problem.f1()(z);
    const SignedLog d = log_diff(a, log_r + b);
    if (d.sign == 0) return 0.0;
    const double lp = log_pi(z, a, b);
    if (lp == kNegInf) throw ProposalSupportError("v_saris: proposal vanishes where f0 != r* f1");
    return std::exp(2.0 * d.log_abs - lp);
  });
  return z_pi * m / (c1 * c1);
}

double v_ris_mixt(const RatioProblem& problem, double r_star, double c1,
                  const Integrator& integrator) {
  if (!(r_star > 0.0) || !(c1 > 0.0)) throw std::invalid_argument("v_ris_mixt: r* and c1 must be positive");
  check_problem_mass(problem, r_star, c1, integrator);
  const double log_r = std::log(r_star);
  const double log_c0 = std::log(r_star * c1), log_c1 = std::log(c1);

  // Moments under q = 1/2 (p0 + p1) of functions of (log f0, log f1, log pi~), pi~ = f0 + r* f1.
  auto moment = [&](auto&& g) {
    return integrate(integrator, [&](double x) {
      const Point z{x};
      const double a = problem.f0()(z), b = problem.f1()(z);
      const double lpi = log_add(a, log_r + b);
      if (lpi == kNegInf) return 0.0;
      const double q = 0.5 * (std::exp(a - log_c0) + std::exp(b - log_c1));
      return q * g(a, b, lpi);
    });
  };
  const double a_mean = moment([](double a, double, double lpi) { return std::exp(a - lpi); });
  const double b_mean = moment([](double, double b, double lpi) { return std::exp(b - lpi); });
  const double aa = moment([](double a, double, double lpi) { return std::exp(2.0 * (a - lpi)); });
  const double bb = moment([](double, double b, double lpi) { return std::exp(2.0 * (b - lpi)); });
  const double ab = moment([](double a, double b, double lpi) { return std::exp(a + b - 2.0 * lpi); });

  // psi(r) = A(r) - r B(r); A' = -E[f0 f1 / pi~^2], B' = -E[f1^2 / pi~^2].
  const double var_a = aa - a_mean * a_mean;
  const double var_b = bb - b_mean * b_mean;
  const double cov_ab = ab - a_mean * b_mean;
  const double var_score = var_a - 2.0 * r_star * cov_ab + r_star * r_star * var_b;
  const double slope = -ab - b_mean + r_star * bb;
  if (slope == 0.0) return std::numeric_limits<double>::infinity();
  return var_score / (slope * slope);
}

VarianceReport variance_identity_check(const RatioProblem& problem, const Integrator& integrator) {
  const NormalizedPair pair = normalized_pair(problem);
  const double r_star = std::exp(pair.log_c0 - pair.log_c1);
  const double c1 = std::exp(pair.log_c1);
  const double scale = r_star * r_star;

  VarianceReport rep;
  rep.psi = overlap_psi(pair.p0, pair.p1, integrator);
  rep.v_bridge_opt = v_bridge_opt(rep.psi, r_star);
  rep.v_ris_opt = v_ris_opt(pair.p0, pair.p1, integrator, r_star);
  rep.v_ext_mixt = v_saris(problem, ProposalFamily::mixt(), r_star, c1, integrator);
  rep.v_saris_mixt = v_saris(problem, ProposalFamily::mixt(), r_star, c1, integrator,
                             SamplingScheme::FixedMixture);
  rep.v_ris_mixt = v_ris_mixt(problem, r_star, c1, integrator);

  const double psi2 = rep.psi * rep.psi;
  rep.max_rel_err = std::max({rel_err(rep.v_ext_mixt, rep.psi * rep.v_bridge_opt, scale),
                              rel_err(rep.v_ext_mixt, psi2 * rep.v_ris_mixt, scale),
                              rel_err(rep.v_ext_mixt, psi2 * rep.v_saris_mixt, scale)});
  rep.identity_ok = rep.max_rel_err < 1e-6;
  rep.ris_le_bridge = rep.v_ris_opt <= rep.v_bridge_opt + 1e-12 * scale;
  rep.ext_bounded = rep.v_ext_mixt <= 4.0 * scale;
  rep.bridge_over_ext = rep.v_bridge_opt / rep.v_ext_mixt;
  rep.bridge_gt_100x_ext = rep.v_bridge_opt > 100.0 * rep.v_ext_mixt;
  return rep;
}

std::string to_json(const VarianceReport& r) {
  auto finite_or_null = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["psi"] = r.psi;
  j["v_bridge_opt"] = finite_or_null(r.v_bridge_opt);
  j["v_ris_opt"] = r.v_ris_opt;
  j["v_ext_mixt"] = r.v_ext_mixt;
  j["v_saris_mixt"] = finite_or_null(r.v_saris_mixt);
  j["v_ris_mixt"] = finite_or_null(r.v_ris_mixt);
  j["max_rel_err"] = finite_or_null(r.max_rel_err);
  j["flags"] = {{"identity_ok", r.identity_ok},
                {"ris_le_bridge", r.ris_le_bridge},
                {"ext_bounded", r.ext_bounded},
                {"bridge_gt_100x_ext", r.bridge_gt_100x_ext}};
  j["bridge_over_ext"] = finite_or_null(r.bridge_over_ext);
  return j.dump();
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ReplicationStats replication_stats(const std::vector<double>& estimates, double truth) {
  if (estimates.empty()) throw std::invalid_argument("replication_stats: no estimates");
  ReplicationStats s;
  s.n_reps = estimates.size();
  const double n = static_cast<double>(s.n_reps);
  s.mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
  double ss = 0.0, se = 0.0;
  for (double x : estimates) {
    ss += (x - s.mean) * (x - s.mean);
    se += (x - truth) * (x - truth);
  }
  s.sd = s.n_reps > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.mse = se / n;
  s.q05 = quantile(estimates, 0.05);
  s.q50 = quantile(estimates, 0.50);
  s.q95 = quantile(estimates, 0.95);
  return s;
}

}  // namespace saris
