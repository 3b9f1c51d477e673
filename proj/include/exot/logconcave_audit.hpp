#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "exot/findim_approx.hpp"

namespace exot {

struct ModulusPoint {
  std::size_t n;
  double kappa;
};

/// Uniform log-concavity modulus of the n-dimensional projections.
struct ModulusCurve {
  std::vector<ModulusPoint> points;
};

/// 1 / lambda_max(Sigma_n) = 1 / (sigma2 (1 - rho + n rho)).
double gaussian_modulus(const ExchangeableGaussian& g, std::size_t n);

/// Smallest eigenvalue of the precision matrix Sigma_n^{-1}, computed with
/// a dense eigensolver. Cross-check for gaussian_modulus.
double numeric_gaussian_modulus(const ExchangeableGaussian& g, std::size_t n);

ModulusCurve modulus_curve(const ExchangeableGaussian& g, const std::vector<std::size_t>& n_list);

/// One-dimensional potential of the shared-shift construction. Only the
/// quadratic kind V(s) = curvature * (s - center)^2 / 2 + const is
/// supported; its x-projection is exactly Gaussian.
struct PotentialSpec {
  std::string kind = "quadratic";
  double curvature = 1.0;
  double center = 0.0;
};

/// Law of x = (x_1..x_n) when t ~ N(0,1) and, given t, the x_i are i.i.d.
/// with density exp(-V(x_i + t)). For quadratic V with curvature a this is
/// the exchangeable Gaussian with covariance (1/a) I + 11^T and mean
/// `center`. The result does not depend on n. Throws DomainError for any
/// other potential kind (use grid_hessian_modulus instead).
ExchangeableGaussian counterexample_projection(const PotentialSpec& v, std::size_t n);

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct GridHessianResult {
  double modulus;
  std::vector<double> argmin;
  /// Unit direction of the minimizing second difference.
  std::vector<double> direction;
  bool log_concave;
};

/// Minimum over interior grid points of the box (`resolution` cells per
/// axis) and over the coordinate axes plus the diagonal 1/sqrt(n) of the
/// second difference of -log density with step equal to the smallest axis
/// cell width. Requires n <= 3. Throws DomainError when the density is not
/// strictly positive and finite where it is evaluated.
GridHessianResult grid_hessian_modulus(const std::function<double(std::span<const double>)>& density,
                                       const Box& box, std::size_t resolution);

struct ProjectionBoundsRow {
  std::size_t n;
  double kappa;        // lower modulus 1 / lambda_max(Sigma_n)
  double upper;        // upper modulus lambda_max(Sigma_n^{-1}) = 1 / lambda_min(Sigma_n)
  double numeric_kappa;
  double numeric_upper;
};

struct ProjectionBoundsReport {
  std::vector<ProjectionBoundsRow> rows;
  /// kappa_n >= kappa_m for all n < m (lower bound survives projection).
  bool lower_preserved = true;
  /// upper_n <= upper_m for all n < m (upper bound survives projection).
  bool upper_preserved = true;
  /// Largest closed-form vs. numeric discrepancy.
  double max_numeric_error = 0.0;
};

inline constexpr double kInterlacingTolerance = 1e-10;

ProjectionBoundsReport projection_bounds_check(const ExchangeableGaussian& g, const std::vector<std::size_t>& n_list);

/// Limit of n * kappa_n, recovered exactly from two dimensions because
/// 1 / (n kappa_n) = sigma2 rho + sigma2 (1 - rho) / n is affine in 1/n.
/// Infinite when rho = 0.
double extrapolated_rate(const ModulusCurve& curve);

/// "yes" when kappa is constant over the tested dimensions (relative spread
/// at most 1e-12), "no" otherwise.
bool uniform_over_tested_range(const ModulusCurve& curve);

/// "n,kappa"
void write_modulus_csv(std::ostream& os, const ModulusCurve& curve);

nlohmann::json audit_summary(const ExchangeableGaussian& g, const std::vector<std::size_t>& n_list);

}  // namespace exot
