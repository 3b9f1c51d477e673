#include "exot/dist1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "exot/error.hpp"
#include "exot/rng.hpp"

namespace exot {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kWeightTolerance = 1e-12;
// Curvature below -kCurvatureTolerance counts as a log-concavity violation;
// smaller negative values are rounding in second differences of affine pieces.
constexpr double kCurvatureTolerance = 1e-9;

// (1 - exp(-z)) / z, continuous at 0.
double exp_ratio(double z) {
  if (std::abs(z) < 1e-12) return 1.0 - 0.5 * z;
  return -std::expm1(-z) / z;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void check_level(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw InputError("quantile level must lie in (0,1), got " + fmt(t));
  }
}

double gaussian_curvature(const Gaussian& g) { return 1.0 / (g.std * g.std); }

}  // namespace

// ---------------------------------------------------------------- grid

GridPotential::GridPotential(std::vector<double> xs, std::vector<double> vs)
    : xs_(std::move(xs)), vs_(std::move(vs)) {
  const std::size_t m = xs_.size();
  if (m < 3) throw InputError("grid needs at least 3 points");
  if (vs_.size() != m) throw InputError("grid xs and vs differ in length");
  if (!all_finite(xs_) || !all_finite(vs_)) throw InputError("grid values must be finite");
  for (std::size_t i = 1; i < m; ++i) {
    if (!(xs_[i] > xs_[i - 1])) throw InputError("grid xs must be strictly increasing");
  }
  shift_ = *std::min_element(vs_.begin(), vs_.end());
  shifted_.resize(m);
  for (std::size_t i = 0; i < m; ++i) shifted_[i] = vs_[i] - shift_;

  left_slope_ = (shifted_[1] - shifted_[0]) / (xs_[1] - xs_[0]);
  right_slope_ = (shifted_[m - 1] - shifted_[m - 2]) / (xs_[m - 1] - xs_[m - 2]);
  if (!(left_slope_ < 0.0) || !(right_slope_ > 0.0)) {
    throw DomainError("non-integrable: grid potential tails do not decay (left slope " +
                      fmt(left_slope_) + ", right slope " + fmt(right_slope_) + ")");
  }

  seg_mass_.resize(m + 1);
  seg_mass_[0] = std::exp(-shifted_[0]) / (-left_slope_);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double h = xs_[i + 1] - xs_[i];
    const double b = (shifted_[i + 1] - shifted_[i]) / h;
    seg_mass_[i + 1] = std::exp(-shifted_[i]) * h * exp_ratio(b * h);
  }
  seg_mass_[m] = std::exp(-shifted_[m - 1]) / right_slope_;
  prefix_.assign(m + 2, 0.0);
  for (std::size_t k = 0; k <= m; ++k) prefix_[k + 1] = prefix_[k] + seg_mass_[k];
  total_ = prefix_[m + 1];
  log_z_ = std::log(total_) - shift_;
}

double GridPotential::potential(double x) const {
  const std::size_t m = xs_.size();
  if (x <= xs_[0]) return vs_[0] + left_slope_ * (x - xs_[0]);
  if (x >= xs_[m - 1]) return vs_[m - 1] + right_slope_ * (x - xs_[m - 1]);
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
  const double h = xs_[i + 1] - xs_[i];
  const double w = (x - xs_[i]) / h;
  return (1.0 - w) * vs_[i] + w * vs_[i + 1];
}

double GridPotential::mass_below(double x) const {
  const std::size_t m = xs_.size();
  if (x <= xs_[0]) {
    return std::exp(-shifted_[0] - left_slope_ * (x - xs_[0])) / (-left_slope_);
  }
  if (x >= xs_[m - 1]) return total_ - mass_above(x);
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
  const double h = xs_[i + 1] - xs_[i];
  const double b = (shifted_[i + 1] - shifted_[i]) / h;
  const double s = x - xs_[i];
  return prefix_[i + 1] + std::exp(-shifted_[i]) * s * exp_ratio(b * s);
}

double GridPotential::mass_above(double x) const {
  const std::size_t m = xs_.size();
  if (x >= xs_[m - 1]) {
    return std::exp(-shifted_[m - 1] - right_slope_ * (x - xs_[m - 1])) / right_slope_;
  }
  if (x <= xs_[0]) return total_ - mass_below(x);
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
  const double h = xs_[i + 1] - xs_[i];
  const double b = (shifted_[i + 1] - shifted_[i]) / h;
  const double s = xs_[i + 1] - x;
  const double w_at_x = shifted_[i] + b * (x - xs_[i]);
  // Mass of [x, x_{i+1}] integrating leftwards from the right node.
  const double part = std::exp(-w_at_x) * s * exp_ratio(b * s);
  return part + (total_ - prefix_[i + 2]);
}

double GridPotential::invert_in_segment(std::size_t i, double mass) const {
  const double h = xs_[i + 1] - xs_[i];
  const double b = (shifted_[i + 1] - shifted_[i]) / h;
  const double r = mass * std::exp(shifted_[i]);
  double s;
  if (std::abs(b * h) < 1e-12) {
    s = r;
  } else {
    const double arg = -r * b;
    s = arg <= -1.0 ? h : -std::log1p(arg) / b;
  }
  return xs_[i] + std::clamp(s, 0.0, h);
}

double GridPotential::cdf(double x) const { return std::clamp(mass_below(x) / total_, 0.0, 1.0); }

double GridPotential::sf(double x) const { return std::clamp(mass_above(x) / total_, 0.0, 1.0); }

double GridPotential::quantile(double t) const {
  const std::size_t m = xs_.size();
  const double target = t * total_;
  if (target <= prefix_[1]) {
    const double c = -left_slope_;
    return xs_[0] + std::log(target * c * std::exp(shifted_[0])) / c;
  }
  if (target >= prefix_[m]) return upper_quantile(1.0 - t);
  const auto it = std::upper_bound(prefix_.begin() + 1, prefix_.begin() + m, target);
  const std::size_t k = static_cast<std::size_t>(it - prefix_.begin()) - 1;  // 1..m-1
  return invert_in_segment(k - 1, target - prefix_[k]);
}

double GridPotential::upper_quantile(double u) const {
  const std::size_t m = xs_.size();
  const double above = u * total_;
  if (above <= seg_mass_[m]) {
    return xs_[m - 1] - std::log(above * right_slope_ * std::exp(shifted_[m - 1])) / right_slope_;
  }
  const double target = total_ - above;
  if (target <= prefix_[1]) return quantile(1.0 - u);
  const auto it = std::upper_bound(prefix_.begin() + 1, prefix_.begin() + m, target);
  const std::size_t k = static_cast<std::size_t>(it - prefix_.begin()) - 1;
  return invert_in_segment(k - 1, target - prefix_[k]);
}

double GridPotential::second_moment() const {
  using boost::math::quadrature::gauss_kronrod;
  const std::size_t m = xs_.size();
  double acc = 0.0;
  // Exponential tails in closed form.
  {
    const double c = -left_slope_;
    const double x0 = xs_[0];
    acc += std::exp(-shifted_[0]) * (x0 * x0 / c - 2.0 * x0 / (c * c) + 2.0 / (c * c * c));
  }
  {
    const double b = right_slope_;
    const double x1 = xs_[m - 1];
    acc += std::exp(-shifted_[m - 1]) * (x1 * x1 / b + 2.0 * x1 / (b * b) + 2.0 / (b * b * b));
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double x0 = xs_[i];
    const double h = xs_[i + 1] - x0;
    const double b = (shifted_[i + 1] - shifted_[i]) / h;
    const double w0 = shifted_[i];
    auto f = [&](double x) { return x * x * std::exp(-w0 - b * (x - x0)); };
    acc += gauss_kronrod<double, 31>::integrate(f, x0, xs_[i + 1], 0);
  }
  return acc / total_;
}

// ---------------------------------------------------------------- empirical

Empirical::Empirical(std::vector<double> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw InputError("empirical law needs at least one atom");
  if (weights_.size() != atoms_.size()) throw InputError("atoms and weights differ in length");
  if (!all_finite(atoms_) || !all_finite(weights_)) throw InputError("atoms and weights must be finite");
  if (!std::is_sorted(atoms_.begin(), atoms_.end())) {
    std::vector<std::size_t> order(atoms_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms_[a] < atoms_[b]; });
    std::vector<double> xs, ws;
    for (std::size_t i : order) {
      xs.push_back(atoms_[i]);
      ws.push_back(weights_[i]);
    }
    atoms_ = std::move(xs);
    weights_ = std::move(ws);
  }
  for (double w : weights_) {
    if (!(w > 0.0)) throw InputError("weights must be positive");
  }
  const double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(sum - 1.0) > kWeightTolerance) {
    throw InputError("weights sum " + fmt(sum) + ", expected 1");
  }
  const std::size_t n = atoms_.size();
  cum_.resize(n);
  std::partial_sum(weights_.begin(), weights_.end(), cum_.begin());
  cum_.back() = 1.0;
  tail_.assign(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) tail_[i] = tail_[i + 1] + weights_[i];
}

Empirical::Empirical(std::vector<double> atoms)
    : Empirical(atoms, std::vector<double>(atoms.size(), atoms.empty() ? 0.0 : 1.0 / static_cast<double>(atoms.size()))) {}

double Empirical::cdf(double x) const {
  const auto k = static_cast<std::size_t>(std::upper_bound(atoms_.begin(), atoms_.end(), x) - atoms_.begin());
  return k == 0 ? 0.0 : cum_[k - 1];
}

double Empirical::quantile(double t) const {
  const auto k = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), t) - cum_.begin());
  return atoms_[std::min(k, atoms_.size() - 1)];
}

double Empirical::upper_quantile(double u) const {
  // smallest i with F(a_i) > 1 - u, i.e. tail_[i + 1] < u
  const auto first = std::partition_point(tail_.begin() + 1, tail_.end(), [u](double r) { return r >= u; });
  const auto j = static_cast<std::size_t>(first - tail_.begin());
  return atoms_[std::min(j - 1, atoms_.size() - 1)];
}

// ---------------------------------------------------------------- Dist1D

Dist1D Dist1D::gaussian(double mean, double std) {
  if (!std::isfinite(mean) || !std::isfinite(std)) throw InputError("gaussian parameters must be finite");
  if (!(std > 0.0)) throw InputError("gaussian std must be positive");
  return Dist1D(Gaussian{mean, std});
}

Dist1D Dist1D::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw InputError("uniform bounds must be finite");
  if (!(hi > lo)) throw InputError("uniform requires lo < hi");
  return Dist1D(Uniform{lo, hi});
}

Dist1D Dist1D::grid(std::vector<double> xs, std::vector<double> vs) {
  return Dist1D(GridPotential(std::move(xs), std::move(vs)));
}

Dist1D Dist1D::empirical(std::vector<double> atoms, std::vector<double> weights) {
  return Dist1D(Empirical(std::move(atoms), std::move(weights)));
}

Dist1D Dist1D::empirical(std::vector<double> atoms) { return Dist1D(Empirical(std::move(atoms))); }

std::string Dist1D::kind() const {
  switch (v_.index()) {
    case 0: return "gaussian";
    case 1: return "uniform";
    case 2: return "grid";
    default: return "empirical";
  }
}

template <class... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overload(Fs...) -> Overload<Fs...>;

double cdf(const Dist1D& d, double s) {
  return std::visit(
      Overload{[s](const Gaussian& g) { return 0.5 * std::erfc(-(s - g.mean) / (g.std * std::numbers::sqrt2)); },
               [s](const Uniform& u) { return std::clamp((s - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
               [s](const GridPotential& p) { return p.cdf(s); },
               [s](const Empirical& e) { return e.cdf(s); }},
      d.variant());
}

double sf(const Dist1D& d, double s) {
  return std::visit(
      Overload{[s](const Gaussian& g) { return 0.5 * std::erfc((s - g.mean) / (g.std * std::numbers::sqrt2)); },
               [s](const Uniform& u) { return std::clamp((u.hi - s) / (u.hi - u.lo), 0.0, 1.0); },
               [s](const GridPotential& p) { return p.sf(s); },
               [s](const Empirical& e) {
                 const auto& a = e.atoms();
                 const auto k = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), s) - a.begin());
                 double r = 0.0;
                 for (std::size_t i = k; i < a.size(); ++i) r += e.weights()[i];
                 return r;
               }},
      d.variant());
}

double quantile(const Dist1D& d, double t) {
  check_level(t);
  return std::visit(
      Overload{[t](const Gaussian& g) {
                 return g.mean - g.std * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * t);
               },
               [t](const Uniform& u) { return u.lo + t * (u.hi - u.lo); },
               [t](const GridPotential& p) { return p.quantile(t); },
               [t](const Empirical& e) { return e.quantile(t); }},
      d.variant());
}

double upper_quantile(const Dist1D& d, double u) {
  check_level(u);
  return std::visit(
      Overload{[u](const Gaussian& g) {
                 return g.mean + g.std * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
               },
               [u](const Uniform& un) { return un.hi - u * (un.hi - un.lo); },
               [u](const GridPotential& p) { return p.upper_quantile(u); },
               [u](const Empirical& e) { return e.upper_quantile(u); }},
      d.variant());
}

std::vector<double> sample(const Dist1D& d, std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  std::vector<double> out(count);
  for (auto& x : out) x = quantile(d, rng.uniform());
  return out;
}

double mean(const Dist1D& d) {
  return std::visit(
      Overload{[](const Gaussian& g) { return g.mean; },
               [](const Uniform& u) { return 0.5 * (u.lo + u.hi); },
               [](const GridPotential& p) {
                 // Mean by the midpoint quantile rule; only used for diagnostics.
                 const QuantileGrid grid(4096);
                 double acc = 0.0;
                 for (std::size_t i = 0; i < grid.size(); ++i) acc += p.quantile(grid.node(i));
                 return acc * grid.step();
               },
               [](const Empirical& e) {
                 double acc = 0.0;
                 for (std::size_t i = 0; i < e.atoms().size(); ++i) acc += e.weights()[i] * e.atoms()[i];
                 return acc;
               }},
      d.variant());
}

double second_moment(const Dist1D& d) {
  return std::visit(
      Overload{[](const Gaussian& g) { return g.mean * g.mean + g.std * g.std; },
               [](const Uniform& u) { return (u.lo * u.lo + u.lo * u.hi + u.hi * u.hi) / 3.0; },
               [](const GridPotential& p) { return p.second_moment(); },
               [](const Empirical& e) {
                 double acc = 0.0;
                 for (std::size_t i = 0; i < e.atoms().size(); ++i) {
                   acc += e.weights()[i] * e.atoms()[i] * e.atoms()[i];
                 }
                 return acc;
               }},
      d.variant());
}

double log_density(const Dist1D& d, double x) {
  return std::visit(
      Overload{[x](const Gaussian& g) {
                 const double z = (x - g.mean) / g.std;
                 return -0.5 * z * z - std::log(g.std) - 0.5 * std::log(2.0 * std::numbers::pi);
               },
               [x](const Uniform& u) { return (x >= u.lo && x <= u.hi) ? -std::log(u.hi - u.lo) : -kInf; },
               [x](const GridPotential& p) { return -p.potential(x) - p.log_normalization(); },
               [x](const Empirical& e) {
                 const auto& a = e.atoms();
                 auto [lo, hi] = std::equal_range(a.begin(), a.end(), x);
                 if (lo == hi) return -kInf;
                 double w = 0.0;
                 for (auto it = lo; it != hi; ++it) w += e.weights()[static_cast<std::size_t>(it - a.begin())];
                 return std::log(w);
               }},
      d.variant());
}

CurvatureBounds potential_curvature(const Dist1D& d) {
  return std::visit(
      Overload{[](const Gaussian& g) {
                 const double k = gaussian_curvature(g);
                 return CurvatureBounds{k, k, g.mean, g.mean};
               },
               [](const Uniform& u) {
                 const double mid = 0.5 * (u.lo + u.hi);
                 return CurvatureBounds{0.0, 0.0, mid, mid};
               },
               [](const GridPotential& p) {
                 const auto& xs = p.xs();
                 const auto& vs = p.vs();
                 CurvatureBounds b{kInf, -kInf, xs[1], xs[1]};
                 for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
                   const double hl = xs[i] - xs[i - 1];
                   const double hr = xs[i + 1] - xs[i];
                   const double dd = 2.0 * ((vs[i + 1] - vs[i]) / hr - (vs[i] - vs[i - 1]) / hl) / (hl + hr);
                   if (dd < b.lower) {
                     b.lower = dd;
                     b.argmin = xs[i];
                   }
                   if (dd > b.upper) {
                     b.upper = dd;
                     b.argmax = xs[i];
                   }
                 }
                 return b;
               },
               [](const Empirical&) -> CurvatureBounds { throw DomainError("no density"); }},
      d.variant());
}

LogConcavity logconcavity_modulus(const Dist1D& d) {
  const CurvatureBounds b = potential_curvature(d);
  if (b.lower < -kCurvatureTolerance) return {-kInf, false, b.argmin};
  return {std::max(b.lower, 0.0), true, std::nullopt};
}

QuantileGrid::QuantileGrid(std::size_t count) : count_(count) {
  if (count == 0) throw InputError("quantile grid needs at least one node");
}

std::vector<double> quantiles_on(const Dist1D& d, const QuantileGrid& grid) {
  std::vector<double> q(grid.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = quantile(d, grid.node(i));
  return q;
}

// ---------------------------------------------------------------- JSON

nlohmann::json to_json(const Dist1D& d) {
  using nlohmann::json;
  return std::visit(
      Overload{[](const Gaussian& g) { return json{{"kind", "gaussian"}, {"mean", g.mean}, {"std", g.std}}; },
               [](const Uniform& u) { return json{{"kind", "uniform"}, {"lo", u.lo}, {"hi", u.hi}}; },
               [](const GridPotential& p) { return json{{"kind", "grid"}, {"xs", p.xs()}, {"vs", p.vs()}}; },
               [](const Empirical& e) {
                 return json{{"kind", "empirical"}, {"atoms", e.atoms()}, {"weights", e.weights()}};
               }},
      d.variant());
}

namespace {

double number_at(const nlohmann::json& j, const char* key, const std::string& path) {
  const std::string where = path + "/" + key;
  if (!j.contains(key)) throw InputError("missing field", where);
  const auto& v = j.at(key);
  if (!v.is_number()) throw InputError("expected a number", where);
  return v.get<double>();
}

std::vector<double> array_at(const nlohmann::json& j, const char* key, const std::string& path) {
  const std::string where = path + "/" + key;
  if (!j.contains(key)) throw InputError("missing field", where);
  const auto& v = j.at(key);
  if (!v.is_array()) throw InputError("expected an array of numbers", where);
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw InputError("expected a number", where + "/" + std::to_string(i));
    out.push_back(v[i].get<double>());
  }
  return out;
}

}  // namespace

Dist1D dist_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw InputError("expected an object", path);
  if (!j.contains("kind") || !j.at("kind").is_string()) throw InputError("missing string field", path + "/kind");
  const std::string kind = j.at("kind").get<std::string>();
  try {
    if (kind == "gaussian") return Dist1D::gaussian(number_at(j, "mean", path), number_at(j, "std", path));
    if (kind == "uniform") return Dist1D::uniform(number_at(j, "lo", path), number_at(j, "hi", path));
    if (kind == "grid") return Dist1D::grid(array_at(j, "xs", path), array_at(j, "vs", path));
    if (kind == "empirical") {
      auto atoms = array_at(j, "atoms", path);
      if (!j.contains("weights")) return Dist1D::empirical(std::move(atoms));
      return Dist1D::empirical(std::move(atoms), array_at(j, "weights", path));
    }
  } catch (const InputError& e) {
    if (!e.path().empty()) throw;
    throw InputError(e.what(), path);
  } catch (const DomainError& e) {
    throw InputError(e.what(), path);
  }
  throw InputError("unknown kind '" + kind + "'", path + "/kind");
}

}  // namespace exot
