#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "exot/dist1d.hpp"

namespace exot {

/// Finite de Finetti representation sum_k w_k m_k^inf of an exchangeable
/// law on R^inf. Component order carries no meaning; duplicates are allowed.
class ExchangeableMixture {
 public:
  /// Throws InputError on empty input, length mismatch, non-positive weights
  /// or weights not summing to one within 1e-12 (no renormalization), and
  /// when a component has infinite second moment.
  ExchangeableMixture(std::vector<Dist1D> components, std::vector<double> weights);
  /// Single countable power m^inf.
  explicit ExchangeableMixture(Dist1D component);

  std::size_t size() const noexcept { return components_.size(); }
  const std::vector<Dist1D>& components() const noexcept { return components_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const Dist1D& component(std::size_t k) const { return components_.at(k); }
  double weight(std::size_t k) const { return weights_.at(k); }

  /// Index of the component drawn by a uniform u in (0,1).
  std::size_t pick(double u) const;

 private:
  std::vector<Dist1D> components_;
  std::vector<double> weights_;
  std::vector<double> cum_;
};

/// One block w_k m_k^{(x)n} of the n-dimensional projection.
struct ProductBlock {
  double weight;
  std::size_t component;
  std::size_t multiplicity;
};

std::vector<ProductBlock> project(const ExchangeableMixture& mix, std::size_t n);

/// `count` rows of the first n coordinates. Row-major storage.
struct PrefixSample {
  std::size_t n = 0;
  std::size_t count = 0;
  std::vector<double> values;
  /// Ground-truth component per row; for diagnostics only, never read by
  /// solvers.
  std::vector<std::size_t> component_labels;

  std::span<const double> row(std::size_t r) const { return {values.data() + r * n, n}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * n, n}; }
};

/// Row r draws its component and then its n coordinates from the substream
/// derive_seed(seed, r), in that order. Two mixtures sampled with the same
/// seed therefore share uniforms row by row, and the first n' < n
/// coordinates of a row do not depend on n.
PrefixSample sample_prefix(const ExchangeableMixture& mix, std::size_t n, std::size_t count, std::uint64_t seed);

/// argmax_k  log w_k + sum_i log m_k(row_i), smallest index on ties.
/// Components that put an atom on every coordinate of the row outrank
/// density components. Throws DomainError("row outside all supports")
/// when every likelihood vanishes.
std::size_t classify_component(const ExchangeableMixture& mix, std::span<const double> row);

/// Law of one coordinate, sum_k w_k m_k.
double coordinate_cdf(const ExchangeableMixture& mix, double s);
double coordinate_quantile(const ExchangeableMixture& mix, double t);

/// {"weights": [...], "components": [Dist1D...]}
ExchangeableMixture parse_mixture(const nlohmann::json& doc);
ExchangeableMixture parse_mixture(const std::string& text);
nlohmann::json mixture_to_json(const ExchangeableMixture& mix);
/// Canonical text: two-space indented JSON, sorted keys, trailing newline.
std::string serialize_mixture(const ExchangeableMixture& mix);

/// CSV with header row,coord_1..coord_n,label.
void write_prefix_csv(std::ostream& os, const PrefixSample& sample);

}  // namespace exot
