#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace saris {

/// A point of the common domain. Discrete fixtures store the support index
/// in the single coordinate.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> coords) : coords_(std::move(coords)) {}
  Point(std::initializer_list<double> coords) : coords_(coords) {}

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }
  std::span<const double> coords() const { return coords_; }
  bool finite() const;

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::vector<double> coords_;
};

/// Unnormalized log-density. eval may return -inf outside the support but
/// never +inf or NaN for finite input.
struct LogDensity {
  std::function<double(const Point&)> eval;
  std::size_t dim = 1;

  double operator()(const Point& z) const { return eval(z); }
};

/// f_i(z) = c_i * N(z; mean_i, sd_i^2) in one dimension. Log constants are
/// stored so the exact samplers and quadrature oracles can reconstruct p_i.
struct GaussianPairFixture {
  double mean0 = 0.0, sd0 = 1.0, log_c0 = 0.0;
  double mean1 = 0.0, sd1 = 1.0, log_c1 = 0.0;
};

/// f_i(k) = weights_i[k] on {0, ..., n-1} with counting measure.
struct DiscreteFixture {
  std::vector<double> weights0;
  std::vector<double> weights1;
};

using Fixture = std::variant<std::monostate, GaussianPairFixture, DiscreteFixture>;

class RatioProblem {
 public:
  RatioProblem(LogDensity f0, LogDensity f1, std::optional<double> true_log_ratio = std::nullopt,
               Fixture fixture = {});

  const LogDensity& f0() const { return f0_; }
  const LogDensity& f1() const { return f1_; }
  std::size_t dim() const { return f0_.dim; }
  const std::optional<double>& true_log_ratio() const { return true_log_ratio_; }
  const Fixture& fixture() const { return fixture_; }

  /// Same problem with (f0, f1) replaced by (c f0, c f1).
  RatioProblem rescaled(double log_c) const;

 private:
  LogDensity f0_;
  LogDensity f1_;
  std::optional<double> true_log_ratio_;
  Fixture fixture_;
};

/// Heuristic proportionality check: true when log f0 - log f1 is constant
/// (to rel_tol) over every grid point where both are finite. Needs >= 3 points.
bool looks_proportional(const RatioProblem& problem, std::span<const Point> grid,
                        double rel_tol = 1e-12);

enum class ProposalFlavor { Opt, Mixt, Fixed };

/// Unnormalized proposal pi~_r. Opt is |f0 - r f1|, Mixt is f0 + r f1, Fixed
/// ignores r and uses `fixed` (flagged normalized when it integrates to one).
struct ProposalFamily {
  ProposalFlavor flavor = ProposalFlavor::Mixt;
  std::optional<LogDensity> fixed;
  bool normalized = false;

  static ProposalFamily opt() { return {ProposalFlavor::Opt, std::nullopt, false}; }
  static ProposalFamily mixt() { return {ProposalFlavor::Mixt, std::nullopt, false}; }
  static ProposalFamily fixed_density(LogDensity pi, bool normalized) {
    return {ProposalFlavor::Fixed, std::move(pi), normalized};
  }
};

const char* to_string(ProposalFlavor flavor);

/// Raised when a proposal density vanishes where the integrand does not.
class ProposalSupportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log pi~_r(z). Returns -inf for Opt on the set f0(z) == r f1(z).
/// Throws std::invalid_argument for r <= 0.
double log_unnorm_proposal(const ProposalFamily& family, const RatioProblem& problem, double r,
                           const Point& z);

/// Same, from already evaluated log f0(z), log f1(z).
double log_unnorm_proposal(const ProposalFamily& family, double log_r, double log_f0, double log_f1,
                           const Point& z);

RatioProblem make_gaussian_pair_problem(const GaussianPairFixture& fixture);

/// Standard normal f0 and N(mu, 1) f1; both normalized so log r* = 0.
RatioProblem make_gaussian_shift_problem(double mu);

/// Counting-measure problem on {0, ..., n-1}. Rejects unequal lengths, n < 2,
/// non-positive weights and proportional weight vectors.
RatioProblem make_discrete_problem(std::vector<double> weights0, std::vector<double> weights1);

/// Support points of a discrete fixture, or empty for anything else.
std::vector<Point> discrete_support(const RatioProblem& problem);

}  // namespace saris
