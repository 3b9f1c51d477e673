#include "exot/logconcave_audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "exot/error.hpp"
#include "exot/format.hpp"

namespace exot {

double gaussian_modulus(const ExchangeableGaussian& g, std::size_t n) { return 1.0 / g.max_eigenvalue(n); }

double numeric_gaussian_modulus(const ExchangeableGaussian& g, std::size_t n) {
  const Eigen::MatrixXd precision = g.covariance(n).inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(precision, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

ModulusCurve modulus_curve(const ExchangeableGaussian& g, const std::vector<std::size_t>& n_list) {
  ModulusCurve curve;
  for (std::size_t n : n_list) curve.points.push_back({n, gaussian_modulus(g, n)});
  return curve;
}

ExchangeableGaussian counterexample_projection(const PotentialSpec& v, std::size_t n) {
  if (v.kind != "quadratic") {
    throw DomainError("potential kind '" + v.kind +
                      "' is not quadratic; its projection is not Gaussian, use grid_hessian_modulus");
  }
  if (!(v.curvature > 0.0) || !std::isfinite(v.curvature)) throw InputError("potential curvature must be positive");
  if (n == 0) throw InputError("dimension must be positive");
  // Cov = (1/a) I + 11^T  =>  sigma2 = 1/a + 1, rho = 1 / sigma2.
  const double sigma2 = 1.0 / v.curvature + 1.0;
  return ExchangeableGaussian(sigma2, 1.0 / sigma2, v.center);
}

GridHessianResult grid_hessian_modulus(const std::function<double(std::span<const double>)>& density,
                                       const Box& box, std::size_t resolution) {
  const std::size_t n = box.lo.size();
  if (n == 0 || n > 3) throw InputError("grid Hessian modulus supports dimensions 1 to 3");
  if (box.hi.size() != n) throw InputError("box bounds differ in dimension");
  if (resolution < 2) throw InputError("resolution must be at least 2");
  std::vector<double> cell(n);
  double h = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(box.hi[i] > box.lo[i])) throw InputError("box must have lo < hi on every axis");
    cell[i] = (box.hi[i] - box.lo[i]) / static_cast<double>(resolution);
    h = std::min(h, cell[i]);
  }

  std::vector<std::vector<double>> dirs;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    dirs.push_back(e);
  }
  if (n >= 2) dirs.emplace_back(n, 1.0 / std::sqrt(static_cast<double>(n)));

  auto potential = [&](std::span<const double> x) {
    const double p = density(x);
    if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("density underflow on the box");
    return -std::log(p);
  };

  GridHessianResult best{std::numeric_limits<double>::infinity(), {}, {}, true};
  std::vector<std::size_t> idx(n, 1);
  std::vector<double> x(n), xp(n), xm(n);
  const std::size_t interior = resolution - 1;
  while (true) {
    for (std::size_t i = 0; i < n; ++i) x[i] = box.lo[i] + static_cast<double>(idx[i]) * cell[i];
    const double v0 = potential(x);
    for (const auto& d : dirs) {
      for (std::size_t i = 0; i < n; ++i) {
        xp[i] = x[i] + h * d[i];
        xm[i] = x[i] - h * d[i];
      }
      const double second = (potential(xp) - 2.0 * v0 + potential(xm)) / (h * h);
      if (second < best.modulus) {
        best.modulus = second;
        best.argmin = x;
        best.direction = d;
      }
    }
    std::size_t axis = 0;
    while (axis < n && idx[axis] == interior) idx[axis++] = 1;
    if (axis == n) break;
    ++idx[axis];
  }
  best.log_concave = best.modulus >= 0.0;
  return best;
}

ProjectionBoundsReport projection_bounds_check(const ExchangeableGaussian& g, const std::vector<std::size_t>& n_list) {
  ProjectionBoundsReport report;
  for (std::size_t n : n_list) {
    ProjectionBoundsRow row;
    row.n = n;
    row.kappa = gaussian_modulus(g, n);
    row.upper = 1.0 / g.min_eigenvalue(n);
    const Eigen::MatrixXd precision = g.covariance(n).inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(precision, Eigen::EigenvaluesOnly);
    row.numeric_kappa = es.eigenvalues().minCoeff();
    row.numeric_upper = es.eigenvalues().maxCoeff();
    report.max_numeric_error = std::max({report.max_numeric_error, std::abs(row.kappa - row.numeric_kappa),
                                         std::abs(row.upper - row.numeric_upper)});
    report.rows.push_back(row);
  }
  for (std::size_t a = 0; a < report.rows.size(); ++a) {
    for (std::size_t b = a + 1; b < report.rows.size(); ++b) {
      const auto& lo = report.rows[a];
      const auto& hi = report.rows[b];
      if (lo.n >= hi.n) continue;
      if (lo.kappa < hi.kappa - kInterlacingTolerance) report.lower_preserved = false;
      if (lo.upper > hi.upper + kInterlacingTolerance) report.upper_preserved = false;
    }
  }
  return report;
}

double extrapolated_rate(const ModulusCurve& curve) {
  if (curve.points.size() < 2) throw InputError("rate extrapolation needs two dimensions");
  const auto& p1 = curve.points[curve.points.size() - 2];
  const auto& p2 = curve.points.back();
  const double n1 = static_cast<double>(p1.n), n2 = static_cast<double>(p2.n);
  const double y1 = 1.0 / (n1 * p1.kappa), y2 = 1.0 / (n2 * p2.kappa);
  const double intercept = (n2 * y2 - n1 * y1) / (n2 - n1);
  const double slope_scale = std::max(std::abs(n1 * y1), std::abs(n2 * y2));
  if (intercept <= 1e-12 * slope_scale) return std::numeric_limits<double>::infinity();
  return 1.0 / intercept;
}

bool uniform_over_tested_range(const ModulusCurve& curve) {
  if (curve.points.empty()) return false;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& p : curve.points) {
    lo = std::min(lo, p.kappa);
    hi = std::max(hi, p.kappa);
  }
  return lo > 0.0 && (hi - lo) <= 1e-12 * hi;
}

void write_modulus_csv(std::ostream& os, const ModulusCurve& curve) {
  os << "n,kappa\n";
  for (const auto& p : curve.points) os << p.n << ',' << format_double(p.kappa) << '\n';
}

nlohmann::json audit_summary(const ExchangeableGaussian& g, const std::vector<std::size_t>& n_list) {
  const ModulusCurve curve = modulus_curve(g, n_list);
  const ProjectionBoundsReport bounds = projection_bounds_check(g, n_list);
  nlohmann::json points = nlohmann::json::array();
  double numeric_error = 0.0;
  bool borell = true;
  for (const auto& p : curve.points) {
    const double numeric = numeric_gaussian_modulus(g, p.n);
    numeric_error = std::max(numeric_error, std::abs(numeric - p.kappa));
    borell = borell && p.kappa > 0.0;
    points.push_back({{"n", p.n}, {"kappa", p.kappa}, {"numeric_kappa", numeric}});
  }
  nlohmann::json out{{"family", {{"sigma2", g.sigma2()}, {"rho", g.rho()}, {"mean_shift", g.mean_shift()}}},
                     {"curve", points},
                     {"uniform", uniform_over_tested_range(curve)},
                     {"log_concave_every_n", borell},
                     {"numeric_max_error", numeric_error},
                     {"lower_bound_preserved", bounds.lower_preserved},
                     {"upper_bound_preserved", bounds.upper_preserved}};
  if (curve.points.size() >= 2) {
    const double rate = extrapolated_rate(curve);
    out["n_kappa_limit"] = std::isfinite(rate) ? nlohmann::json(rate) : nlohmann::json(nullptr);
  }
  return out;
}

}  // namespace exot
