#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "exot/definetti.hpp"
#include "exot/dist1d.hpp"
#include "exot/wasserstein1d.hpp"

namespace exot {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> init);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// C[i][j] = W2^2(m_i, n_j) between mixture components.
using CostMatrix = Matrix;

struct DiscreteCoupling {
  Matrix plan;
  double value = 0.0;
  /// Dual potentials (exact backend): u_i + v_j <= C_ij with equality on the
  /// support. Entries for dropped zero-weight indices are zero.
  std::vector<double> u;
  std::vector<double> v;
  /// max |C_ij - u_i - v_j| over basic cells plus max violation of dual
  /// feasibility; zero up to rounding at an optimum.
  double dual_residual = 0.0;
  double marginal_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
  /// Indices whose weight was exactly zero and were removed before solving.
  std::vector<std::size_t> dropped_sources;
  std::vector<std::size_t> dropped_targets;
};

/// Exact transportation simplex. Initial basis by the northwest-corner rule;
/// the entering cell is the first (row-major) cell with negative reduced
/// cost and ties for the leaving cell go to the smallest row-major index.
/// Throws InputError on shape mismatch, negative or non-finite weights, or
/// totals that differ by more than 1e-9.
DiscreteCoupling solve_exact(const CostMatrix& cost, std::span<const double> a, std::span<const double> b);

/// Log-domain Sinkhorn iterations for the entropic problem with
/// regularization `epsilon`. `value` is the transport cost <plan, C>.
/// `converged` is false when max_iter is reached with marginal residual
/// above tol.
DiscreteCoupling solve_entropic(const CostMatrix& cost, std::span<const double> a, std::span<const double> b,
                                double epsilon, std::size_t max_iter = 10000, double tol = 1e-9);

enum class Backend { exact, entropic };

struct OuterOptions {
  Backend backend = Backend::exact;
  double epsilon = 0.01;
  std::size_t max_iter = 100000;
  double tol = 1e-9;
};

CostMatrix component_costs(const ExchangeableMixture& mu, const ExchangeableMixture& nu, const QuantileGrid& grid);

struct NestedValue {
  double value = 0.0;
  DiscreteCoupling coupling;
  CostMatrix cost;
};

/// Minimum of E(x_1 - y_1)^2 over exchangeable couplings of mu and nu,
/// computed as the optimal transport value between the mixing weights with
/// ground cost W2^2 between components. Throws SolverError if the entropic
/// backend does not converge.
NestedValue exchangeable_value(const ExchangeableMixture& mu, const ExchangeableMixture& nu,
                               const QuantileGrid& grid = QuantileGrid(), const OuterOptions& options = {});

/// Diagonal exchangeable map: the row's component decides the target
/// component and the per-coordinate monotone map.
struct ExchangeableMap {
  std::vector<std::size_t> assignment;  // source component -> target component
  std::vector<Map1D> inner_maps;        // one per source component
};

inline constexpr double kMassTolerance = 1e-9;

struct NotSolvable {
  enum class Reason { split_row, atomic_source };
  Reason reason;
  std::size_t source_component;
  /// The full offending row of the coupling (split_row) or empty.
  std::vector<double> witness_row;
  std::string message;
};

using SolvabilityVerdict = std::variant<ExchangeableMap, NotSolvable>;

/// Monge solvability from an optimal outer coupling: every source row must
/// carry a single entry above kMassTolerance, and every source component
/// must be atomless. On success the map is assembled from monotone maps.
SolvabilityVerdict monge_solvability(const ExchangeableMixture& mu, const ExchangeableMixture& nu,
                                     const DiscreteCoupling& coupling);

/// Classifies the prefix's component and applies its inner map coordinatewise.
std::vector<double> apply_exchangeable_map(const ExchangeableMap& map, const ExchangeableMixture& mix,
                                           std::span<const double> prefix);

/// "i,j,mass,cost" rows for entries with positive mass.
void write_coupling_csv(std::ostream& os, const DiscreteCoupling& coupling, const CostMatrix& cost);

/// {"solvable": bool, "assignment": [...], "reason": ...}
nlohmann::json verdict_to_json(const SolvabilityVerdict& verdict);

}  // namespace exot
