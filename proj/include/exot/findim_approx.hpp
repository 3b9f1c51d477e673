#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "exot/definetti.hpp"
#include "exot/outer_ot.hpp"

namespace exot {

// ------------------------------------------------------------ assignment

struct Assignment {
  /// perm[r] = column matched to row r.
  std::vector<std::size_t> perm;
  double total = 0.0;
};

/// Minimum-cost perfect matching of a square cost matrix by shortest
/// augmenting paths with potentials (O(N^3), deterministic). `total` is the
/// sum of matched costs added in ascending order.
Assignment solve_assignment(const Matrix& cost);

// ------------------------------------------------------------ empirical value

/// Assignment optimum between two equal-size clouds with cost
/// ||x_r - y_s||^2, divided by n * count. Throws InputError on unequal
/// sizes or dimensions. Squared distances are summed in sorted order, so
/// the value is exactly invariant under joint coordinate permutations and
/// under row reorderings of either cloud.
double empirical_value(const PrefixSample& x, const PrefixSample& y);

/// K_n estimate: both clouds drawn by sample_prefix with the same seed,
/// so that identical mixtures give identical clouds.
double empirical_value(const ExchangeableMixture& mu, const ExchangeableMixture& nu, std::size_t n,
                       std::size_t sample_size, std::uint64_t seed);

struct ConvergenceRow {
  std::size_t n;
  double mean;
  double half_width;  // 95% Student-t
  std::size_t sample_size;
  std::size_t replications;
  std::vector<double> values;  // one per replication
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double reference = 0.0;
  /// Spearman correlation between n and the per-n mean.
  double spearman_of_means = 0.0;
  /// Average over replications of the Spearman correlation between n and
  /// that replication's values.
  double mean_replication_spearman = 0.0;
};

inline constexpr std::size_t kDefaultReplications = 20;

/// Replication r uses seed derive_seed(seed, r) for every n, so the rows
/// of different dimensions share their leading coordinates. The reference
/// is the nested value from exchangeable_value.
ConvergenceTable convergence_experiment(const ExchangeableMixture& mu, const ExchangeableMixture& nu,
                                        const std::vector<std::size_t>& n_list, std::size_t sample_size,
                                        std::size_t replications, std::uint64_t seed,
                                        const QuantileGrid& grid = QuantileGrid());

/// "n,mean,half_width,sample_size,replications,reference"
void write_convergence_csv(std::ostream& os, const ConvergenceTable& table);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided 95% Student-t half-width of the mean.
double t_half_width(std::span<const double> values);

// ------------------------------------------------------------ Gaussians

/// N(mean_shift * 1, sigma2 * ((1 - rho) I + rho 11^T)) in every dimension n.
class ExchangeableGaussian {
 public:
  /// Throws InputError unless sigma2 > 0 and 0 <= rho < 1.
  ExchangeableGaussian(double sigma2, double rho, double mean_shift = 0.0);

  double sigma2() const noexcept { return sigma2_; }
  double rho() const noexcept { return rho_; }
  double mean_shift() const noexcept { return mean_shift_; }

  /// Eigenvalue on the orthogonal complement of 1 (multiplicity n - 1).
  double transverse_eigenvalue() const noexcept { return sigma2_ * (1.0 - rho_); }
  /// Eigenvalue on the diagonal direction 1.
  double diagonal_eigenvalue(std::size_t n) const noexcept {
    return sigma2_ * (1.0 - rho_ + static_cast<double>(n) * rho_);
  }
  double max_eigenvalue(std::size_t n) const;
  double min_eigenvalue(std::size_t n) const;

  Eigen::MatrixXd covariance(std::size_t n) const;

 private:
  double sigma2_;
  double rho_;
  double mean_shift_;
};

struct EigenReport {
  double source_diagonal, source_transverse;
  double target_diagonal, target_transverse;
  /// Eigenvalues of the linear Brenier map on the two invariant subspaces.
  double map_diagonal, map_transverse;
};

struct BrenierLipschitz {
  double lipschitz;
  EigenReport eigen;
};

/// Spectral norm of the linear optimal map between the centred
/// n-dimensional projections. Both covariances share the eigenvectors 1 and
/// 1^perp, so the map acts by sqrt(target / source eigenvalue) on each.
BrenierLipschitz gaussian_brenier_lipschitz(const ExchangeableGaussian& source, const ExchangeableGaussian& target,
                                            std::size_t n);

/// Symmetric positive definite square root by eigendecomposition. Throws
/// DomainError if the matrix is not positive definite.
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& a);

/// Matrix of the optimal linear map between N(0, source) and N(0, target):
/// S^{-1/2} (S^{1/2} T S^{1/2})^{1/2} S^{-1/2}.
Eigen::MatrixXd gaussian_brenier_matrix(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target);

// ------------------------------------------------------------ map Lipschitz monitor

enum class MonitorMode { gaussian, empirical };

struct MonitorRow {
  std::size_t n;
  double lipschitz;
};

struct MonitorReport {
  MonitorMode mode;
  std::vector<MonitorRow> rows;
  /// "bounded", "unbounded", or "undetermined" (empirical mode never
  /// certifies boundedness).
  std::string verdict;
  bool divergence_flag = false;
  /// Empirical figures are lower bounds on the true Lipschitz constants.
  bool lower_bound_only = false;
};

/// Closed form: the Lipschitz constant stays bounded in n iff the target
/// has rho = 0 or the source has rho > 0 (the ratio of diagonal eigenvalues
/// then converges).
MonitorReport assumption_a_monitor(const ExchangeableGaussian& source, const ExchangeableGaussian& target,
                                   const std::vector<std::size_t>& n_list);

/// Lower bounds from optimal matchings of sampled prefixes: the largest
/// ||y_s(r) - y_s(r')|| / ||x_r - x_r'|| over matched pairs. Divergence is
/// flagged when the figures increase along n_list and the last exceeds the
/// first by more than 25%.
MonitorReport assumption_a_monitor(const ExchangeableMixture& mu, const ExchangeableMixture& nu,
                                   const std::vector<std::size_t>& n_list, std::size_t sample_size,
                                   std::uint64_t seed);

nlohmann::json monitor_to_json(const MonitorReport& report);

}  // namespace exot
