#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace exot {

struct Gaussian {
  double mean = 0.0;
  double std = 1.0;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

/// Density proportional to exp(-V), V piecewise linear through (xs[i], vs[i])
/// and extended linearly beyond the end nodes with the end-segment slopes.
/// Per-segment masses are exact for that interpolant, so cdf and quantile
/// are closed form.
class GridPotential {
 public:
  /// Throws InputError on a bad grid and DomainError when the extrapolated
  /// tails do not decay (left slope >= 0 or right slope <= 0).
  GridPotential(std::vector<double> xs, std::vector<double> vs);

  const std::vector<double>& xs() const noexcept { return xs_; }
  /// Potential values as given (not shifted).
  const std::vector<double>& vs() const noexcept { return vs_; }
  /// log of the normalizing constant Z = integral of exp(-V).
  double log_normalization() const noexcept { return log_z_; }

  double potential(double x) const;
  double cdf(double x) const;
  double sf(double x) const;
  double quantile(double t) const;
  /// quantile(1 - u), accurate for small u.
  double upper_quantile(double u) const;
  double second_moment() const;

 private:
  // Mass of (-inf, x] relative to the shifted potential (unnormalized).
  double mass_below(double x) const;
  double mass_above(double x) const;
  double invert_in_segment(std::size_t seg, double mass) const;

  std::vector<double> xs_;
  std::vector<double> vs_;
  std::vector<double> shifted_;   // vs_ - min(vs_)
  std::vector<double> seg_mass_;  // [left tail, segments..., right tail]
  std::vector<double> prefix_;    // prefix_[i] = sum seg_mass_[0..i)
  double left_slope_ = 0.0;
  double right_slope_ = 0.0;
  double total_ = 0.0;
  double shift_ = 0.0;
  double log_z_ = 0.0;
};

/// Finitely supported law. Atoms are stored sorted nondecreasing (input in
/// any order is sorted together with its weights); weights positive and
/// summing to one.
class Empirical {
 public:
  Empirical(std::vector<double> atoms, std::vector<double> weights);
  /// Equal weights.
  explicit Empirical(std::vector<double> atoms);

  const std::vector<double>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double cdf(double x) const;
  double quantile(double t) const;
  double upper_quantile(double u) const;
  /// Cumulative weights, cumulative()[i] = F(atoms[i]).
  const std::vector<double>& cumulative() const noexcept { return cum_; }
  /// tail_sums()[i] = sum of weights[i..]; size atoms().size() + 1.
  const std::vector<double>& tail_sums() const noexcept { return tail_; }

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<double> cum_;
  std::vector<double> tail_;  // tail_[i] = sum of weights_[i..]
};

/// A one-dimensional probability law. Immutable once built.
class Dist1D {
 public:
  using Variant = std::variant<Gaussian, Uniform, GridPotential, Empirical>;

  static Dist1D gaussian(double mean, double std);
  static Dist1D uniform(double lo, double hi);
  static Dist1D grid(std::vector<double> xs, std::vector<double> vs);
  static Dist1D empirical(std::vector<double> atoms, std::vector<double> weights);
  static Dist1D empirical(std::vector<double> atoms);
  static Dist1D point_mass(double x) { return empirical({x}, {1.0}); }

  const Variant& variant() const noexcept { return v_; }
  template <class T>
  const T* as() const noexcept {
    return std::get_if<T>(&v_);
  }

  std::string kind() const;
  bool has_density() const noexcept { return !as<Empirical>(); }
  bool unbounded_support() const noexcept { return as<Gaussian>() || as<GridPotential>(); }

 private:
  explicit Dist1D(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

double cdf(const Dist1D& d, double s);
/// 1 - cdf, computed without cancellation in the upper tail.
double sf(const Dist1D& d, double s);
/// Generalized inverse inf{s : F(s) > t}. Throws InputError unless 0 < t < 1.
double quantile(const Dist1D& d, double t);
/// quantile(d, 1 - u) evaluated without forming 1 - u.
double upper_quantile(const Dist1D& d, double u);
std::vector<double> sample(const Dist1D& d, std::uint64_t seed, std::size_t count);
double mean(const Dist1D& d);
double second_moment(const Dist1D& d);

/// Log of the density at x; -infinity outside the support. For Empirical
/// laws this is the log of the probability mass (-infinity off the atoms).
double log_density(const Dist1D& d, double x);

/// Extreme values of V'' (V = -log density) over the support interior.
/// Grid potentials use second divided differences at interior nodes.
struct CurvatureBounds {
  double lower;
  double upper;
  double argmin;
  double argmax;
};
/// Throws DomainError("no density") for Empirical laws.
CurvatureBounds potential_curvature(const Dist1D& d);

/// Largest K with V'' >= K. When the density is not log-concave `kappa` is
/// -infinity and `witness` holds the grid point with the most negative
/// second difference.
struct LogConcavity {
  double kappa;
  bool log_concave;
  std::optional<double> witness;
};
LogConcavity logconcavity_modulus(const Dist1D& d);

/// Midpoint nodes t_i = (i - 1/2) / N, i = 1..N.
class QuantileGrid {
 public:
  static constexpr std::size_t kDefaultCount = 100000;

  explicit QuantileGrid(std::size_t count = kDefaultCount);
  std::size_t size() const noexcept { return count_; }
  /// Zero-based: node(0) = 1/(2N).
  double node(std::size_t i) const noexcept {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(count_);
  }
  double step() const noexcept { return 1.0 / static_cast<double>(count_); }

 private:
  std::size_t count_;
};

std::vector<double> quantiles_on(const Dist1D& d, const QuantileGrid& grid);

nlohmann::json to_json(const Dist1D& d);
/// `path` is the JSON pointer of `j`, used in error messages.
Dist1D dist_from_json(const nlohmann::json& j, const std::string& path = "");

}  // namespace exot
