#include "exot/definetti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "exot/error.hpp"
#include "exot/format.hpp"
#include "exot/rng.hpp"
#include "exot/wasserstein1d.hpp"

namespace exot {
namespace {

constexpr double kWeightTolerance = 1e-12;

}  // namespace

ExchangeableMixture::ExchangeableMixture(std::vector<Dist1D> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw InputError("mixture needs at least one component", "/components");
  if (weights_.size() != components_.size()) {
    throw InputError("weights and components differ in length", "/weights");
  }
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!std::isfinite(weights_[k]) || !(weights_[k] > 0.0)) {
      throw InputError("weights must be positive", "/weights/" + std::to_string(k));
    }
  }
  const double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(sum - 1.0) > kWeightTolerance) throw InputError("weights sum " + format_double(sum), "/weights");
  for (std::size_t k = 0; k < components_.size(); ++k) {
    try {
      require_finite_second_moment(components_[k]);
    } catch (const InputError& e) {
      throw InputError(e.what(), "/components/" + std::to_string(k));
    }
  }
  cum_.resize(weights_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cum_.begin());
  cum_.back() = 1.0;
}

ExchangeableMixture::ExchangeableMixture(Dist1D component)
    : ExchangeableMixture(std::vector<Dist1D>{std::move(component)}, {1.0}) {}

std::size_t ExchangeableMixture::pick(double u) const {
  const auto k = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
  return std::min(k, cum_.size() - 1);
}

std::vector<ProductBlock> project(const ExchangeableMixture& mix, std::size_t n) {
  if (n == 0) throw InputError("projection dimension must be at least 1");
  std::vector<ProductBlock> blocks;
  blocks.reserve(mix.size());
  for (std::size_t k = 0; k < mix.size(); ++k) blocks.push_back({mix.weight(k), k, n});
  return blocks;
}

PrefixSample sample_prefix(const ExchangeableMixture& mix, std::size_t n, std::size_t count, std::uint64_t seed) {
  if (n == 0 || count == 0) throw InputError("sample_prefix needs n >= 1 and count >= 1");
  PrefixSample out;
  out.n = n;
  out.count = count;
  out.values.resize(n * count);
  out.component_labels.resize(count);
  for (std::size_t r = 0; r < count; ++r) {
    Rng rng(derive_seed(seed, r));
    const std::size_t k = mix.pick(rng.uniform());
    out.component_labels[r] = k;
    auto row = out.row(r);
    for (auto& x : row) x = quantile(mix.component(k), rng.uniform());
  }
  return out;
}

std::size_t classify_component(const ExchangeableMixture& mix, std::span<const double> row) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  // Tier 1: components with an atom at every coordinate (their likelihood is
  // a mass, infinitely larger than any density value).
  std::size_t best = mix.size();
  int best_tier = -1;
  double best_score = kNegInf;
  std::vector<double> terms;
  terms.reserve(row.size());
  for (std::size_t k = 0; k < mix.size(); ++k) {
    const Dist1D& d = mix.component(k);
    // Sorted summation keeps the score invariant under coordinate permutations.
    terms.clear();
    for (double x : row) terms.push_back(log_density(d, x));
    std::sort(terms.begin(), terms.end());
    double score = std::log(mix.weight(k));
    for (double t : terms) score += t;
    if (score == kNegInf || std::isnan(score)) continue;
    const int tier = d.has_density() ? 0 : 1;
    if (tier > best_tier || (tier == best_tier && score > best_score)) {
      best = k;
      best_tier = tier;
      best_score = score;
    }
  }
  if (best == mix.size()) throw DomainError("row outside all supports");
  return best;
}

double coordinate_cdf(const ExchangeableMixture& mix, double s) {
  double acc = 0.0;
  for (std::size_t k = 0; k < mix.size(); ++k) acc += mix.weight(k) * cdf(mix.component(k), s);
  return acc;
}

double coordinate_quantile(const ExchangeableMixture& mix, double t) {
  if (!(t > 0.0 && t < 1.0)) throw InputError("quantile level must lie in (0,1)");
  // F(s) <= max_k F_k(s) <= t below every component quantile.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& d : mix.components()) {
    const double q = quantile(d, t);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  lo -= 1.0;
  double step = 1.0;
  while (coordinate_cdf(mix, hi) <= t) {
    hi += step;
    step *= 2.0;
  }
  // Invariant: F(lo) <= t < F(hi).
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (coordinate_cdf(mix, mid) > t) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// ---------------------------------------------------------------- JSON

ExchangeableMixture parse_mixture(const nlohmann::json& doc) {
  if (!doc.is_object()) throw InputError("expected an object", "");
  if (!doc.contains("weights") || !doc.at("weights").is_array()) {
    throw InputError("missing array field", "/weights");
  }
  if (!doc.contains("components") || !doc.at("components").is_array()) {
    throw InputError("missing array field", "/components");
  }
  const auto& jw = doc.at("weights");
  std::vector<double> weights;
  for (std::size_t i = 0; i < jw.size(); ++i) {
    if (!jw[i].is_number()) throw InputError("expected a number", "/weights/" + std::to_string(i));
    weights.push_back(jw[i].get<double>());
  }
  const auto& jc = doc.at("components");
  std::vector<Dist1D> components;
  for (std::size_t i = 0; i < jc.size(); ++i) {
    components.push_back(dist_from_json(jc[i], "/components/" + std::to_string(i)));
  }
  return ExchangeableMixture(std::move(components), std::move(weights));
}

ExchangeableMixture parse_mixture(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("invalid JSON: ") + e.what(), "");
  }
  return parse_mixture(doc);
}

nlohmann::json mixture_to_json(const ExchangeableMixture& mix) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& d : mix.components()) comps.push_back(to_json(d));
  return nlohmann::json{{"weights", mix.weights()}, {"components", comps}};
}

std::string serialize_mixture(const ExchangeableMixture& mix) { return mixture_to_json(mix).dump(2) + "\n"; }

void write_prefix_csv(std::ostream& os, const PrefixSample& sample) {
  os << "row";
  for (std::size_t i = 1; i <= sample.n; ++i) os << ",coord_" << i;
  os << ",label\n";
  for (std::size_t r = 0; r < sample.count; ++r) {
    os << r;
    for (double x : sample.row(r)) os << ',' << format_double(x);
    os << ',' << sample.component_labels[r] << '\n';
  }
}

}  // namespace exot
