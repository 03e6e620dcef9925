#include "saris/density.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "saris/logmath.hpp"

namespace saris {

bool Point::finite() const {
  for (double c : coords_)
    if (!std::isfinite(c)) return false;
  return true;
}

RatioProblem::RatioProblem(LogDensity f0, LogDensity f1, std::optional<double> true_log_ratio,
                           Fixture fixture)
    : f0_(std::move(f0)),
      f1_(std::move(f1)),
      true_log_ratio_(true_log_ratio),
      fixture_(std::move(fixture)) {
  if (!f0_.eval || !f1_.eval) throw std::invalid_argument("RatioProblem: empty density");
  if (f0_.dim == 0 || f0_.dim != f1_.dim)
    throw std::invalid_argument("RatioProblem: f0 and f1 dimensions differ");
}

RatioProblem RatioProblem::rescaled(double log_c) const {
  auto scale = [log_c](LogDensity f) {
    auto inner = f.eval;
    f.eval = [inner, log_c](const Point& z) { return inner(z) + log_c; };
    return f;
  };
  // Fixture constants are dropped on purpose: they describe the unscaled pair.
  return RatioProblem(scale(f0_), scale(f1_), true_log_ratio_, {});
}

bool looks_proportional(const RatioProblem& problem, std::span<const Point> grid, double rel_tol) {
  if (grid.size() < 3) throw std::invalid_argument("looks_proportional: need at least 3 points");
  std::optional<double> reference;
  for (const Point& z : grid) {
    const double a = problem.f0()(z);
    const double b = problem.f1()(z);
    if (!std::isfinite(a) || !std::isfinite(b)) {
      if (std::isfinite(a) != std::isfinite(b)) return false;
      continue;
    }
    const double d = a - b;
    if (!reference) {
      reference = d;
    } else if (std::abs(d - *reference) > rel_tol * std::max(1.0, std::abs(*reference))) {
      return false;
    }
  }
  return true;
}

const char* to_string(ProposalFlavor flavor) {
  switch (flavor) {
    case ProposalFlavor::Opt: return "opt";
    case ProposalFlavor::Mixt: return "mixt";
    case ProposalFlavor::Fixed: return "fixed";
  }
  return "?";
}

double log_unnorm_proposal(const ProposalFamily& family, double log_r, double log_f0, double log_f1,
                           const Point& z) {
  switch (family.flavor) {
    case ProposalFlavor::Opt: return log_diff(log_f0, log_r + log_f1).log_abs;
    case ProposalFlavor::Mixt: return log_add(log_f0, log_r + log_f1);
    case ProposalFlavor::Fixed:
      if (!family.fixed) throw std::invalid_argument("Fixed proposal without a density");
      return (*family.fixed)(z);
  }
  return kNegInf;
}

double log_unnorm_proposal(const ProposalFamily& family, const RatioProblem& problem, double r,
                           const Point& z) {
  if (!(r > 0.0)) throw std::invalid_argument("log_unnorm_proposal: r must be positive");
  if (family.flavor == ProposalFlavor::Fixed)
    return log_unnorm_proposal(family, std::log(r), kNegInf, kNegInf, z);
  return log_unnorm_proposal(family, std::log(r), problem.f0()(z), problem.f1()(z), z);
}

RatioProblem make_gaussian_pair_problem(const GaussianPairFixture& fx) {
  if (!(fx.sd0 > 0.0) || !(fx.sd1 > 0.0))
    throw std::invalid_argument("Gaussian fixture: standard deviations must be positive");
  const double v0 = fx.sd0 * fx.sd0;
  const double v1 = fx.sd1 * fx.sd1;
  LogDensity f0{[m = fx.mean0, v0, lc = fx.log_c0](const Point& z) {
                  return lc + log_normal_pdf(z[0], m, v0);
                },
                1};
  LogDensity f1{[m = fx.mean1, v1, lc = fx.log_c1](const Point& z) {
                  return lc + log_normal_pdf(z[0], m, v1);
                },
                1};
  return RatioProblem(std::move(f0), std::move(f1), fx.log_c0 - fx.log_c1, fx);
}

RatioProblem make_gaussian_shift_problem(double mu) {
  if (!std::isfinite(mu)) throw std::invalid_argument("make_gaussian_shift_problem: mu not finite");
  return make_gaussian_pair_problem({0.0, 1.0, 0.0, mu, 1.0, 0.0});
}

namespace {

LogDensity discrete_density(std::vector<double> weights) {
  std::vector<double> logs(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) logs[i] = std::log(weights[i]);
  return LogDensity{[logs = std::move(logs)](const Point& z) {
                      const double x = z[0];
                      if (!(x >= 0.0) || x != std::floor(x)) return kNegInf;
                      const auto k = static_cast<std::size_t>(x);
                      return k < logs.size() ? logs[k] : kNegInf;
                    },
                    1};
}

}  // namespace

RatioProblem make_discrete_problem(std::vector<double> weights0, std::vector<double> weights1) {
  const std::size_t n = weights0.size();
  if (n != weights1.size()) throw std::invalid_argument("make_discrete_problem: length mismatch");
  if (n < 2) throw std::invalid_argument("make_discrete_problem: need at least 2 support points");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights0[i] > 0.0) || !(weights1[i] > 0.0) || !std::isfinite(weights0[i]) ||
        !std::isfinite(weights1[i]))
      throw std::invalid_argument("make_discrete_problem: weights must be positive and finite");
  }
  bool proportional = true;
  const double q = weights0[0] / weights1[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(weights0[i] / weights1[i] - q) > 1e-12 * q) proportional = false;
  }
  if (proportional)
    throw std::invalid_argument("make_discrete_problem: weight vectors are proportional");

  const double s0 = std::accumulate(weights0.begin(), weights0.end(), 0.0);
  const double s1 = std::accumulate(weights1.begin(), weights1.end(), 0.0);
  const double truth = std::log(s0) - std::log(s1);
  DiscreteFixture fx{weights0, weights1};
  return RatioProblem(discrete_density(std::move(weights0)), discrete_density(std::move(weights1)),
                      truth, std::move(fx));
}

std::vector<Point> discrete_support(const RatioProblem& problem) {
  std::vector<Point> support;
  if (const auto* fx = std::get_if<DiscreteFixture>(&problem.fixture())) {
    for (std::size_t i = 0; i < fx->weights0.size(); ++i) support.push_back(Point{double(i)});
  }
  return support;
}

}  // namespace saris
