#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "exot/dist1d.hpp"

namespace exot {

/// A law's quantile function sampled at the midpoint nodes of a grid. Cost
/// matrices reuse one profile per component instead of re-evaluating
/// quantiles for every pair.
class QuantileProfile {
 public:
  QuantileProfile(Dist1D d, const QuantileGrid& grid);

  const Dist1D& dist() const noexcept { return dist_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  Dist1D dist_;
  std::vector<double> values_;
};

/// Number of end cells on each side that are integrated adaptively instead
/// of by the midpoint rule when either law has unbounded support. Zero for
/// grids with fewer than 4 * kTailCells nodes.
inline constexpr std::size_t kTailCells = 64;

/// Squared quadratic Wasserstein distance through the quantile embedding,
///   W2^2(p, q) = integral over (0,1) of (Qp(t) - Qq(t))^2 dt,
/// evaluated with the midpoint rule on `grid`. If either law has unbounded
/// support the first and last kTailCells cells are replaced by tanh-sinh
/// quadrature, which removes the O(log N / N) midpoint bias from the
/// logarithmic singularity of Q^2 at the ends. Pairs of bounded laws use the
/// plain midpoint sum. Deterministic for a given grid.
///
/// Throws InputError if either law fails the finite second moment gate.
double w2_squared(const Dist1D& p, const Dist1D& q, const QuantileGrid& grid = QuantileGrid());
/// Same value from precomputed profiles (which must share a grid size).
double w2_squared(const QuantileProfile& p, const QuantileProfile& q);

void require_finite_second_moment(const Dist1D& d);

/// Monotone rearrangement s -> Q_target(F_source(s)). Gaussian-to-Gaussian and
/// uniform-to-uniform maps are affine and evaluated in closed form.
class Map1D {
 public:
  /// Clamp applied to F_source(s) so that the target quantile is never
  /// evaluated at 0 or 1.
  static constexpr double kClamp = 1e-15;

  Map1D(Dist1D source, Dist1D target);

  double operator()(double s) const;
  const Dist1D& source() const noexcept { return source_; }
  const Dist1D& target() const noexcept { return target_; }

  struct Affine {
    double slope;
    double source_anchor;
    double target_anchor;  // t(s) = slope * s + (target_anchor - slope * source_anchor)
  };
  const std::optional<Affine>& affine() const noexcept { return affine_; }

 private:
  Dist1D source_;
  Dist1D target_;
  std::optional<Affine> affine_;
};

/// Throws DomainError if the source has atoms (a Monge map may not exist).
Map1D monotone_map(const Dist1D& p, const Dist1D& q);

/// Integral of (s - t(s))^2 against the source law, by the midpoint rule in
/// the quantile variable.
double transport_cost(const Map1D& map, const QuantileGrid& grid = QuantileGrid());

/// Probe pairs closer than this are skipped by lipschitz_estimate: the
/// difference quotient of two nearby evaluations is dominated by rounding.
inline constexpr double kMinProbeSeparation = 1e-4;

/// Empirical lower bound on the Lipschitz constant of `map`: the largest
/// difference quotient over all pairs of `probes` points drawn from the
/// source law with seed `seed`. Nondecreasing when the probe set grows
/// (same seed, more probes). Throws InputError if probes < 2.
double lipschitz_estimate(const Map1D& map, std::size_t probes, std::uint64_t seed);

struct LipschitzReport {
  double estimate = 0.0;
  std::optional<double> bound;
  bool satisfied = false;
};

inline constexpr double kLipschitzSlack = 1e-9;

/// Contraction bound check: verifies that V_source'' <= c_upper and
/// V_target'' >= c_lower on the laws' own curvature evaluation, then compares
/// the empirical Lipschitz estimate of the monotone map with sqrt(c_upper / c_lower).
/// Throws DomainError naming the side whose curvature hypothesis fails.
LipschitzReport caffarelli_check(const Dist1D& source, const Dist1D& target, double c_upper,
                                 double c_lower, std::size_t probes, std::uint64_t seed);

}  // namespace exot
