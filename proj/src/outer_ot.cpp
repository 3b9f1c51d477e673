#include "exot/outer_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>

#include "exot/error.hpp"
#include "exot/format.hpp"
#include "exot/parallel.hpp"

namespace exot {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init) {
  rows_ = init.size();
  cols_ = rows_ == 0 ? 0 : init.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : init) {
    if (r.size() != cols_) throw InputError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

namespace {

struct Reduced {
  std::vector<std::size_t> rows;  // original indices kept
  std::vector<std::size_t> cols;
  std::vector<double> a;
  std::vector<double> b;
};

Reduced validate_and_reduce(const CostMatrix& cost, std::span<const double> a, std::span<const double> b,
                            DiscreteCoupling& out) {
  if (a.size() != cost.rows() || b.size() != cost.cols()) {
    throw InputError("cost matrix is " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()) +
                     " but weights have sizes " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  if (a.empty() || b.empty()) throw InputError("empty transport problem");
  for (double c : cost.data()) {
    if (!std::isfinite(c)) throw InputError("cost entries must be finite");
  }
  Reduced r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || a[i] < 0.0) throw InputError("negative source weight at index " + std::to_string(i));
    if (a[i] == 0.0) {
      out.dropped_sources.push_back(i);
    } else {
      r.rows.push_back(i);
      r.a.push_back(a[i]);
    }
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!std::isfinite(b[j]) || b[j] < 0.0) throw InputError("negative target weight at index " + std::to_string(j));
    if (b[j] == 0.0) {
      out.dropped_targets.push_back(j);
    } else {
      r.cols.push_back(j);
      r.b.push_back(b[j]);
    }
  }
  const double sa = std::accumulate(r.a.begin(), r.a.end(), 0.0);
  const double sb = std::accumulate(r.b.begin(), r.b.end(), 0.0);
  if (r.a.empty() || r.b.empty()) throw InputError("all weights are zero");
  if (std::abs(sa - sb) > 1e-9) {
    throw InputError("source and target totals differ: " + format_double(sa) + " vs " + format_double(sb));
  }
  return r;
}

void finish(const CostMatrix& cost, std::span<const double> a, std::span<const double> b, DiscreteCoupling& out) {
  double value = 0.0;
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    for (std::size_t j = 0; j < cost.cols(); ++j) value += out.plan(i, j) * cost(i, j);
  }
  out.value = value;
  double resid = 0.0;
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cost.cols(); ++j) s += out.plan(i, j);
    resid = std::max(resid, std::abs(s - a[i]));
  }
  for (std::size_t j = 0; j < cost.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < cost.rows(); ++i) s += out.plan(i, j);
    resid = std::max(resid, std::abs(s - b[j]));
  }
  out.marginal_residual = resid;
}

// Transportation simplex on the reduced m x n problem.
class TransportSimplex {
 public:
  TransportSimplex(const Matrix& c, std::vector<double> a, std::vector<double> b)
      : c_(c), m_(a.size()), n_(b.size()), flow_(m_, n_), basic_(m_ * n_, 0) {
    northwest_corner(std::move(a), std::move(b));
    double scale = 1.0;
    for (double x : c_.data()) scale = std::max(scale, std::abs(x));
    tol_ = 1e-12 * scale;
  }

  std::size_t run() {
    const std::size_t limit = 1000 * (m_ + n_) * (m_ + n_) + 1000;
    for (std::size_t it = 0; it < limit; ++it) {
      compute_potentials();
      std::size_t ei = 0, ej = 0;
      if (!find_entering(ei, ej)) return it;
      pivot(ei, ej);
    }
    throw SolverError("transportation simplex exceeded its iteration limit");
  }

  const Matrix& flow() const { return flow_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& v() const { return v_; }

  double dual_residual() const {
    double r = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const double red = c_(i, j) - u_[i] - v_[j];
        r = std::max(r, basic_[i * n_ + j] ? std::abs(red) : std::max(0.0, -red));
      }
    }
    return r;
  }

 private:
  struct Cell {
    std::size_t i, j;
  };

  void northwest_corner(std::vector<double> a, std::vector<double> b) {
    std::size_t i = 0, j = 0;
    double s = a[0], d = b[0];
    while (true) {
      const double x = std::min(s, d);
      add_basic(i, j, x);
      if (i == m_ - 1 && j == n_ - 1) break;
      const bool down = (j == n_ - 1) || (i < m_ - 1 && s <= d);
      if (down) {
        d -= x;
        s = a[++i];
      } else {
        s -= x;
        d = b[++j];
      }
    }
  }

  void add_basic(std::size_t i, std::size_t j, double x) {
    flow_(i, j) = x;
    basic_[i * n_ + j] = 1;
    cells_.push_back({i, j});
  }

  // Adjacency of the basis tree; nodes are rows 0..m-1 then columns.
  void build_tree() {
    adj_.assign(m_ + n_, {});
    for (std::size_t e = 0; e < cells_.size(); ++e) {
      adj_[cells_[e].i].push_back(e);
      adj_[m_ + cells_[e].j].push_back(e);
    }
  }

  std::size_t other_end(std::size_t e, std::size_t node) const {
    const Cell& cell = cells_[e];
    return node == cell.i ? m_ + cell.j : cell.i;
  }

  void compute_potentials() {
    build_tree();
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> seen(m_ + n_, 0);
    std::queue<std::size_t> q;
    seen[0] = 1;
    q.push(0);
    while (!q.empty()) {
      const std::size_t node = q.front();
      q.pop();
      for (std::size_t e : adj_[node]) {
        const std::size_t next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = 1;
        const Cell& cell = cells_[e];
        if (next >= m_) {
          v_[cell.j] = c_(cell.i, cell.j) - u_[cell.i];
        } else {
          u_[cell.i] = c_(cell.i, cell.j) - v_[cell.j];
        }
        q.push(next);
      }
    }
  }

  bool find_entering(std::size_t& ei, std::size_t& ej) const {
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (basic_[i * n_ + j]) continue;
        if (c_(i, j) - u_[i] - v_[j] < -tol_) {
          ei = i;
          ej = j;
          return true;
        }
      }
    }
    return false;
  }

  void pivot(std::size_t ei, std::size_t ej) {
    // Tree path from column ej back to row ei.
    std::vector<std::size_t> parent_edge(m_ + n_, cells_.size());
    std::vector<char> seen(m_ + n_, 0);
    std::queue<std::size_t> q;
    seen[ei] = 1;
    q.push(ei);
    while (!q.empty()) {
      const std::size_t node = q.front();
      q.pop();
      for (std::size_t e : adj_[node]) {
        const std::size_t next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = 1;
        parent_edge[next] = e;
        q.push(next);
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t node = m_ + ej; node != ei;) {
      const std::size_t e = parent_edge[node];
      path.push_back(e);
      node = other_end(e, node);
    }
    // Signs along the cycle: entering +, then -, +, - ... starting at column ej.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = cells_.size();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Cell& cell = cells_[path[k]];
      const double f = flow_(cell.i, cell.j);
      const std::size_t key = cell.i * n_ + cell.j;
      if (f < theta || (f == theta && key < cells_[leave].i * n_ + cells_[leave].j)) {
        theta = f;
        leave = path[k];
      }
    }
    flow_(ei, ej) = theta;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Cell& cell = cells_[path[k]];
      flow_(cell.i, cell.j) += (k % 2 == 0) ? -theta : theta;
    }
    const Cell out = cells_[leave];
    flow_(out.i, out.j) = 0.0;
    basic_[out.i * n_ + out.j] = 0;
    basic_[ei * n_ + ej] = 1;
    cells_[leave] = {ei, ej};
  }

  const Matrix& c_;
  std::size_t m_, n_;
  Matrix flow_;
  std::vector<char> basic_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> u_, v_;
  double tol_ = 0.0;
};

Matrix sub_matrix(const CostMatrix& cost, const Reduced& r) {
  Matrix c(r.rows.size(), r.cols.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    for (std::size_t j = 0; j < r.cols.size(); ++j) c(i, j) = cost(r.rows[i], r.cols[j]);
  }
  return c;
}

double log_sum_exp(std::span<const double> xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

DiscreteCoupling solve_exact(const CostMatrix& cost, std::span<const double> a, std::span<const double> b) {
  DiscreteCoupling out;
  const Reduced r = validate_and_reduce(cost, a, b, out);
  const Matrix c = sub_matrix(cost, r);
  TransportSimplex simplex(c, r.a, r.b);
  out.iterations = simplex.run();
  out.dual_residual = simplex.dual_residual();

  out.plan = Matrix(cost.rows(), cost.cols());
  out.u.assign(cost.rows(), 0.0);
  out.v.assign(cost.cols(), 0.0);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    out.u[r.rows[i]] = simplex.u()[i];
    for (std::size_t j = 0; j < r.cols.size(); ++j) out.plan(r.rows[i], r.cols[j]) = simplex.flow()(i, j);
  }
  for (std::size_t j = 0; j < r.cols.size(); ++j) out.v[r.cols[j]] = simplex.v()[j];
  finish(cost, a, b, out);
  return out;
}

DiscreteCoupling solve_entropic(const CostMatrix& cost, std::span<const double> a, std::span<const double> b,
                                double epsilon, std::size_t max_iter, double tol) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("epsilon must be positive");
  DiscreteCoupling out;
  const Reduced r = validate_and_reduce(cost, a, b, out);
  const Matrix c = sub_matrix(cost, r);
  const std::size_t m = r.a.size(), n = r.b.size();
  std::vector<double> f(m, 0.0), g(n, 0.0), buf(std::max(m, n));
  Matrix plan(m, n);

  auto row_residual = [&] {
    double res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += std::exp((f[i] + g[j] - c(i, j)) / epsilon);
      res = std::max(res, std::abs(s - r.a[i]));
    }
    return res;
  };

  out.converged = false;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) buf[j] = (g[j] - c(i, j)) / epsilon;
      f[i] = epsilon * std::log(r.a[i]) - epsilon * log_sum_exp({buf.data(), n});
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) buf[i] = (f[i] - c(i, j)) / epsilon;
      g[j] = epsilon * std::log(r.b[j]) - epsilon * log_sum_exp({buf.data(), m});
    }
    if (row_residual() <= tol) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.iterations = it;

  out.plan = Matrix(cost.rows(), cost.cols());
  out.u.assign(cost.rows(), 0.0);
  out.v.assign(cost.cols(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    out.u[r.rows[i]] = f[i];
    for (std::size_t j = 0; j < n; ++j) {
      out.plan(r.rows[i], r.cols[j]) = std::exp((f[i] + g[j] - c(i, j)) / epsilon);
    }
  }
  for (std::size_t j = 0; j < n; ++j) out.v[r.cols[j]] = g[j];
  finish(cost, a, b, out);
  return out;
}

CostMatrix component_costs(const ExchangeableMixture& mu, const ExchangeableMixture& nu, const QuantileGrid& grid) {
  const std::size_t k = mu.size(), l = nu.size();
  std::vector<std::optional<QuantileProfile>> profiles(k + l);
  parallel_for(k + l, [&](std::size_t idx) {
    const Dist1D& d = idx < k ? mu.component(idx) : nu.component(idx - k);
    profiles[idx].emplace(d, grid);
  });
  CostMatrix cost(k, l);
  parallel_for(k * l, [&](std::size_t cell) {
    const std::size_t i = cell / l, j = cell % l;
    cost(i, j) = w2_squared(*profiles[i], *profiles[k + j]);
  });
  return cost;
}

NestedValue exchangeable_value(const ExchangeableMixture& mu, const ExchangeableMixture& nu, const QuantileGrid& grid,
                               const OuterOptions& options) {
  NestedValue out;
  out.cost = component_costs(mu, nu, grid);
  if (options.backend == Backend::exact) {
    out.coupling = solve_exact(out.cost, mu.weights(), nu.weights());
  } else {
    out.coupling = solve_entropic(out.cost, mu.weights(), nu.weights(), options.epsilon, options.max_iter, options.tol);
    if (!out.coupling.converged) {
      throw SolverError("entropic solver did not converge in " + std::to_string(options.max_iter) +
                        " iterations (marginal residual " + format_double(out.coupling.marginal_residual) + ")");
    }
  }
  out.value = out.coupling.value;
  return out;
}

SolvabilityVerdict monge_solvability(const ExchangeableMixture& mu, const ExchangeableMixture& nu,
                                     const DiscreteCoupling& coupling) {
  const Matrix& plan = coupling.plan;
  if (plan.rows() != mu.size() || plan.cols() != nu.size()) throw InputError("coupling shape does not match mixtures");
  std::vector<std::size_t> assignment(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::size_t heavy = 0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < nu.size(); ++j) {
      if (plan(i, j) > kMassTolerance) ++heavy;
      if (plan(i, j) > plan(i, arg)) arg = j;
    }
    if (heavy >= 2) {
      const auto row = plan.row(i);
      return NotSolvable{NotSolvable::Reason::split_row, i, {row.begin(), row.end()},
                         "source component " + std::to_string(i) + " is split across " + std::to_string(heavy) +
                             " target components; no optimal transport map exists"};
    }
    assignment[i] = arg;
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!mu.component(i).has_density()) {
      return NotSolvable{NotSolvable::Reason::atomic_source, i, {},
                         "source component " + std::to_string(i) + " has atoms; Monge map may not exist"};
    }
  }
  ExchangeableMap map;
  map.assignment = assignment;
  map.inner_maps.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    map.inner_maps.push_back(monotone_map(mu.component(i), nu.component(assignment[i])));
  }
  return map;
}

std::vector<double> apply_exchangeable_map(const ExchangeableMap& map, const ExchangeableMixture& mix,
                                           std::span<const double> prefix) {
  if (map.inner_maps.size() != mix.size()) throw InputError("map was not assembled for this mixture");
  const std::size_t k = classify_component(mix, prefix);
  std::vector<double> out(prefix.size());
  std::transform(prefix.begin(), prefix.end(), out.begin(), [&](double x) { return map.inner_maps[k](x); });
  return out;
}

void write_coupling_csv(std::ostream& os, const DiscreteCoupling& coupling, const CostMatrix& cost) {
  os << "i,j,mass,cost\n";
  for (std::size_t i = 0; i < coupling.plan.rows(); ++i) {
    for (std::size_t j = 0; j < coupling.plan.cols(); ++j) {
      const double mass = coupling.plan(i, j);
      if (mass <= 0.0) continue;
      os << i << ',' << j << ',' << format_double(mass) << ',' << format_double(cost(i, j)) << '\n';
    }
  }
}

nlohmann::json verdict_to_json(const SolvabilityVerdict& verdict) {
  if (const auto* map = std::get_if<ExchangeableMap>(&verdict)) {
    return nlohmann::json{{"solvable", true}, {"assignment", map->assignment}, {"reason", nullptr}};
  }
  const auto& ns = std::get<NotSolvable>(verdict);
  return nlohmann::json{{"solvable", false},
                        {"assignment", nullptr},
                        {"reason", ns.reason == NotSolvable::Reason::split_row ? "split_row" : "atomic_source"},
                        {"source_component", ns.source_component},
                        {"witness", ns.witness_row},
                        {"message", ns.message}};
}

}  // namespace exot
