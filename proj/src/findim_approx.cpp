#include "exot/findim_approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <boost/math/distributions/students_t.hpp>

#include "exot/error.hpp"
#include "exot/format.hpp"
#include "exot/parallel.hpp"
#include "exot/rng.hpp"

namespace exot {
namespace {

double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

double squared_distance(std::span<const double> x, std::span<const double> y, std::vector<double>& scratch) {
  scratch.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    scratch[i] = d * d;
  }
  return sorted_sum(scratch);
}

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

// ------------------------------------------------------------ assignment

Assignment solve_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw InputError("assignment cost matrix must be square");
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual start of each augmenting path.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  out.perm.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.perm[match[j] - 1] = j - 1;
  std::vector<double> matched(n);
  for (std::size_t r = 0; r < n; ++r) matched[r] = cost(r, out.perm[r]);
  out.total = sorted_sum(matched);
  return out;
}

// ------------------------------------------------------------ empirical value

double empirical_value(const PrefixSample& x, const PrefixSample& y) {
  if (x.count != y.count) {
    throw InputError("clouds must have equal size (" + std::to_string(x.count) + " vs " + std::to_string(y.count) + ")");
  }
  if (x.n != y.n) throw InputError("clouds must have equal dimension");
  const std::size_t count = x.count;
  Matrix cost(count, count);
  std::vector<double> scratch;
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t s = 0; s < count; ++s) cost(r, s) = squared_distance(x.row(r), y.row(s), scratch);
  }
  const Assignment a = solve_assignment(cost);
  return a.total / (static_cast<double>(x.n) * static_cast<double>(count));
}

double empirical_value(const ExchangeableMixture& mu, const ExchangeableMixture& nu, std::size_t n,
                       std::size_t sample_size, std::uint64_t seed) {
  return empirical_value(sample_prefix(mu, n, sample_size, seed), sample_prefix(nu, n, sample_size, seed));
}

double t_half_width(std::span<const double> values) {
  const std::size_t r = values.size();
  if (r < 2) return std::numeric_limits<double>::infinity();
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(r);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(r - 1));
  const boost::math::students_t dist(static_cast<double>(r - 1));
  return boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(r));
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("spearman needs equal-length inputs");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

ConvergenceTable convergence_experiment(const ExchangeableMixture& mu, const ExchangeableMixture& nu,
                                        const std::vector<std::size_t>& n_list, std::size_t sample_size,
                                        std::size_t replications, std::uint64_t seed, const QuantileGrid& grid) {
  if (n_list.empty()) throw InputError("n_list must not be empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] == 0) throw InputError("dimensions must be positive");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw InputError("n_list must be strictly increasing");
  }
  if (sample_size == 0) throw InputError("sample_size must be positive");
  if (replications < 2) throw InputError("replications must be at least 2");

  ConvergenceTable table;
  table.reference = exchangeable_value(mu, nu, grid).value;

  const std::size_t cells = n_list.size() * replications;
  std::vector<double> values(cells);
  parallel_for(cells, [&](std::size_t c) {
    const std::size_t ni = c / replications, r = c % replications;
    values[c] = empirical_value(mu, nu, n_list[ni], sample_size, derive_seed(seed, r));
  });

  std::vector<double> ns, means;
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    ConvergenceRow row;
    row.n = n_list[ni];
    row.values.assign(values.begin() + static_cast<std::ptrdiff_t>(ni * replications),
                      values.begin() + static_cast<std::ptrdiff_t>((ni + 1) * replications));
    row.mean = std::accumulate(row.values.begin(), row.values.end(), 0.0) / static_cast<double>(replications);
    row.half_width = t_half_width(row.values);
    row.sample_size = sample_size;
    row.replications = replications;
    ns.push_back(static_cast<double>(row.n));
    means.push_back(row.mean);
    table.rows.push_back(std::move(row));
  }
  table.spearman_of_means = spearman(ns, means);
  double acc = 0.0;
  std::vector<double> rep(n_list.size());
  for (std::size_t r = 0; r < replications; ++r) {
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) rep[ni] = table.rows[ni].values[r];
    acc += spearman(ns, rep);
  }
  table.mean_replication_spearman = acc / static_cast<double>(replications);
  return table;
}

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table) {
  os << "n,mean,half_width,sample_size,replications,reference\n";
  for (const auto& row : table.rows) {
    os << row.n << ',' << format_double(row.mean) << ',' << format_double(row.half_width) << ',' << row.sample_size
       << ',' << row.replications << ',' << format_double(table.reference) << '\n';
  }
}

// ------------------------------------------------------------ Gaussians

ExchangeableGaussian::ExchangeableGaussian(double sigma2, double rho, double mean_shift)
    : sigma2_(sigma2), rho_(rho), mean_shift_(mean_shift) {
  if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) throw InputError("sigma2 must be positive");
  if (!std::isfinite(rho) || rho < 0.0 || rho >= 1.0) throw InputError("rho must satisfy 0 <= rho < 1");
  if (!std::isfinite(mean_shift)) throw InputError("mean_shift must be finite");
}

double ExchangeableGaussian::max_eigenvalue(std::size_t n) const {
  if (n == 0) throw InputError("dimension must be positive");
  return diagonal_eigenvalue(n);  // rho >= 0
}

double ExchangeableGaussian::min_eigenvalue(std::size_t n) const {
  if (n == 0) throw InputError("dimension must be positive");
  return n == 1 ? diagonal_eigenvalue(1) : transverse_eigenvalue();
}

Eigen::MatrixXd ExchangeableGaussian::covariance(std::size_t n) const {
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(dim, dim, sigma2_ * rho_);
  s.diagonal().setConstant(sigma2_);
  return s;
}

BrenierLipschitz gaussian_brenier_lipschitz(const ExchangeableGaussian& source, const ExchangeableGaussian& target,
                                            std::size_t n) {
  if (n == 0) throw InputError("dimension must be positive");
  EigenReport e{};
  e.source_diagonal = source.diagonal_eigenvalue(n);
  e.source_transverse = source.transverse_eigenvalue();
  e.target_diagonal = target.diagonal_eigenvalue(n);
  e.target_transverse = target.transverse_eigenvalue();
  e.map_diagonal = std::sqrt(e.target_diagonal / e.source_diagonal);
  e.map_transverse = std::sqrt(e.target_transverse / e.source_transverse);
  const double lip = n == 1 ? e.map_diagonal : std::max(e.map_diagonal, e.map_transverse);
  return {lip, e};
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw SolverError("eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0.0) throw DomainError("matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd gaussian_brenier_matrix(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target) {
  const Eigen::MatrixXd s_half = spd_sqrt(source);
  const Eigen::MatrixXd s_half_inv = s_half.inverse();
  const Eigen::MatrixXd middle = spd_sqrt(s_half * target * s_half);
  return s_half_inv * middle * s_half_inv;
}

// ------------------------------------------------------------ map Lipschitz monitor

MonitorReport assumption_a_monitor(const ExchangeableGaussian& source, const ExchangeableGaussian& target,
                                   const std::vector<std::size_t>& n_list) {
  MonitorReport report;
  report.mode = MonitorMode::gaussian;
  for (std::size_t n : n_list) report.rows.push_back({n, gaussian_brenier_lipschitz(source, target, n).lipschitz});
  const bool bounded = target.rho() == 0.0 || source.rho() > 0.0;
  report.verdict = bounded ? "bounded" : "unbounded";
  report.divergence_flag = !bounded;
  return report;
}

MonitorReport assumption_a_monitor(const ExchangeableMixture& mu, const ExchangeableMixture& nu,
                                   const std::vector<std::size_t>& n_list, std::size_t sample_size,
                                   std::uint64_t seed) {
  MonitorReport report;
  report.mode = MonitorMode::empirical;
  report.lower_bound_only = true;
  report.verdict = "undetermined";
  std::vector<double> scratch;
  for (std::size_t n : n_list) {
    const PrefixSample x = sample_prefix(mu, n, sample_size, seed);
    const PrefixSample y = sample_prefix(nu, n, sample_size, seed);
    Matrix cost(sample_size, sample_size);
    for (std::size_t r = 0; r < sample_size; ++r) {
      for (std::size_t s = 0; s < sample_size; ++s) cost(r, s) = squared_distance(x.row(r), y.row(s), scratch);
    }
    const Assignment a = solve_assignment(cost);
    double best = 0.0;
    for (std::size_t r = 0; r < sample_size; ++r) {
      for (std::size_t q = r + 1; q < sample_size; ++q) {
        const double dx = squared_distance(x.row(r), x.row(q), scratch);
        if (dx < 1e-16) continue;
        const double dy = squared_distance(y.row(a.perm[r]), y.row(a.perm[q]), scratch);
        best = std::max(best, std::sqrt(dy / dx));
      }
    }
    report.rows.push_back({n, best});
  }
  if (report.rows.size() >= 2) {
    bool increasing = true;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
      increasing = increasing && report.rows[i].lipschitz > report.rows[i - 1].lipschitz;
    }
    report.divergence_flag = increasing && report.rows.back().lipschitz > 1.25 * report.rows.front().lipschitz;
  }
  return report;
}

nlohmann::json monitor_to_json(const MonitorReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back({{"n", r.n}, {"lipschitz", r.lipschitz}});
  return nlohmann::json{{"mode", report.mode == MonitorMode::gaussian ? "gaussian" : "empirical"},
                        {"rows", rows},
                        {"verdict", report.verdict},
                        {"divergence", report.divergence_flag},
                        {"lower_bound_only", report.lower_bound_only}};
}

}  // namespace exot
