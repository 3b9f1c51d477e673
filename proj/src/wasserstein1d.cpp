#include "exot/wasserstein1d.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "exot/error.hpp"

namespace exot {
namespace {

boost::math::quadrature::tanh_sinh<double>& tail_integrator() {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator;
}

// Jump locations of the lower (or upper) quantile function inside (0, h).
void collect_breaks(const Dist1D& d, double h, bool upper, std::vector<double>& out) {
  const auto* e = d.as<Empirical>();
  if (!e) return;
  const auto& levels = upper ? e->tail_sums() : e->cumulative();
  for (double c : levels) {
    if (c > 0.0 && c < h) out.push_back(c);
  }
}

// Integral over (0, h) of (Qp - Qq)^2 in the lower (upper) tail variable.
double tail_integral(const Dist1D& p, const Dist1D& q, double h, bool upper) {
  std::vector<double> cuts{0.0, h};
  collect_breaks(p, h, upper, cuts);
  collect_breaks(q, h, upper, cuts);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto f = [&](double t) {
    const double a = upper ? upper_quantile(p, t) : quantile(p, t);
    const double b = upper ? upper_quantile(q, t) : quantile(q, t);
    return (a - b) * (a - b);
  };
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    acc += tail_integrator().integrate(f, cuts[i], cuts[i + 1], 1e-12);
  }
  return acc;
}

}  // namespace

QuantileProfile::QuantileProfile(Dist1D d, const QuantileGrid& grid)
    : dist_(std::move(d)), values_(quantiles_on(dist_, grid)) {}

void require_finite_second_moment(const Dist1D& d) {
  const double m2 = second_moment(d);
  if (!std::isfinite(m2)) throw InputError("law of kind '" + d.kind() + "' has infinite second moment");
}

double w2_squared(const QuantileProfile& p, const QuantileProfile& q) {
  const std::size_t n = p.size();
  if (q.size() != n) throw InputError("quantile profiles built on different grids");
  const auto& a = p.values();
  const auto& b = q.values();
  const bool correct_tails =
      (p.dist().unbounded_support() || q.dist().unbounded_support()) && n >= 4 * kTailCells;
  const std::size_t skip = correct_tails ? kTailCells : 0;

  double acc = 0.0;
  for (std::size_t i = skip; i < n - skip; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  acc /= static_cast<double>(n);
  if (correct_tails) {
    const double h = static_cast<double>(kTailCells) / static_cast<double>(n);
    acc += tail_integral(p.dist(), q.dist(), h, false);
    acc += tail_integral(p.dist(), q.dist(), h, true);
  }
  return acc;
}

double w2_squared(const Dist1D& p, const Dist1D& q, const QuantileGrid& grid) {
  require_finite_second_moment(p);
  require_finite_second_moment(q);
  return w2_squared(QuantileProfile(p, grid), QuantileProfile(q, grid));
}

// ---------------------------------------------------------------- maps

Map1D::Map1D(Dist1D source, Dist1D target) : source_(std::move(source)), target_(std::move(target)) {
  if (const auto* gs = source_.as<Gaussian>()) {
    if (const auto* gt = target_.as<Gaussian>()) affine_ = Affine{gt->std / gs->std, gs->mean, gt->mean};
  } else if (const auto* us = source_.as<Uniform>()) {
    if (const auto* ut = target_.as<Uniform>()) affine_ = Affine{(ut->hi - ut->lo) / (us->hi - us->lo), us->lo, ut->lo};
  }
}

double Map1D::operator()(double s) const {
  if (affine_) return affine_->slope * s + (affine_->target_anchor - affine_->slope * affine_->source_anchor);
  const double p = cdf(source_, s);
  if (p <= 0.5) return quantile(target_, std::max(p, kClamp));
  return upper_quantile(target_, std::max(sf(source_, s), kClamp));
}

Map1D monotone_map(const Dist1D& p, const Dist1D& q) {
  if (!p.has_density()) throw DomainError("source has atoms; Monge map may not exist");
  return Map1D(p, q);
}

double transport_cost(const Map1D& map, const QuantileGrid& grid) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = quantile(map.source(), grid.node(i));
    const double d = s - map(s);
    acc += d * d;
  }
  return acc / static_cast<double>(grid.size());
}

double lipschitz_estimate(const Map1D& map, std::size_t probes, std::uint64_t seed) {
  if (probes < 2) throw InputError("lipschitz_estimate needs at least 2 probes");
  std::vector<double> xs = sample(map.source(), seed, probes);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> ys(xs.size());
  std::transform(xs.begin(), xs.end(), ys.begin(), [&](double s) { return map(s); });

  double best = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double dx = xs[j] - xs[i];
      if (dx < kMinProbeSeparation) continue;
      best = std::max(best, std::abs(ys[j] - ys[i]) / dx);
    }
  }
  return best;
}

LipschitzReport caffarelli_check(const Dist1D& source, const Dist1D& target, double c_upper, double c_lower,
                                 std::size_t probes, std::uint64_t seed) {
  if (!(c_upper > 0.0) || !(c_lower > 0.0)) throw InputError("curvature bounds C and c must be positive");
  if (!source.has_density()) throw DomainError("source: no density");
  if (!target.has_density()) throw DomainError("target: no density");
  const CurvatureBounds sc = potential_curvature(source);
  if (sc.upper > c_upper + kLipschitzSlack) {
    throw DomainError("source: potential curvature " + std::to_string(sc.upper) + " at x=" +
                      std::to_string(sc.argmax) + " exceeds C=" + std::to_string(c_upper));
  }
  const CurvatureBounds tc = potential_curvature(target);
  if (tc.lower < c_lower - kLipschitzSlack) {
    throw DomainError("target: potential curvature " + std::to_string(tc.lower) + " at x=" +
                      std::to_string(tc.argmin) + " is below c=" + std::to_string(c_lower));
  }
  LipschitzReport report;
  report.estimate = lipschitz_estimate(monotone_map(source, target), probes, seed);
  report.bound = std::sqrt(c_upper / c_lower);
  report.satisfied = report.estimate <= *report.bound + kLipschitzSlack;
  return report;
}

}  // namespace exot
