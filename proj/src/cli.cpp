#include "exot/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "exot/definetti.hpp"
#include "exot/error.hpp"
#include "exot/findim_approx.hpp"
#include "exot/format.hpp"
#include "exot/logconcave_audit.hpp"
#include "exot/outer_ot.hpp"
#include "exot/svg.hpp"
#include "exot/wasserstein1d.hpp"

namespace exot::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// InputError raised while reading a named file.
class FileInputError : public InputError {
 public:
  FileInputError(const InputError& e, std::string file) : InputError(e.what(), e.path()), file_(std::move(file)) {}
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

/// Sentinel for the Monge-infeasible outcome; the verdict is already printed.
struct MongeInfeasible {};

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileInputError(InputError("cannot read file"), path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FileInputError(InputError(std::string("invalid JSON: ") + e.what()), path);
  }
}

ExchangeableMixture load_mixture(const std::string& path) {
  const json doc = read_json(path);
  try {
    return parse_mixture(doc);
  } catch (const InputError& e) {
    throw FileInputError(e, path);
  }
}

/// A Dist1D document, or a single-component mixture document.
Dist1D load_law(const std::string& path) {
  const json doc = read_json(path);
  try {
    if (doc.is_object() && doc.contains("kind")) return dist_from_json(doc);
    const ExchangeableMixture mix = parse_mixture(doc);
    if (mix.size() != 1) throw InputError("expected a single law, got a mixture", "/components");
    return mix.component(0);
  } catch (const InputError& e) {
    throw FileInputError(e, path);
  }
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (...) {
      throw InputError("invalid dimension '" + item + "' in --n-list");
    }
    if (pos != item.size() || v == 0) throw InputError("invalid dimension '" + item + "' in --n-list");
    if (!out.empty() && v <= out.back()) throw InputError("--n-list must be strictly increasing");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw InputError("--n-list must not be empty");
  return out;
}

std::optional<fs::path> prepare_out_dir(const std::string& dir) {
  if (dir.empty()) return std::nullopt;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("output directory '" + dir + "' is not writable");
  const fs::path probe = fs::path(dir) / ".exot_write_probe";
  {
    std::ofstream os(probe);
    if (!os) throw InputError("output directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
  return fs::path(dir);
}

std::string twelve_digits(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  std::string s = buf;
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::vector<double> parse_csv_row(const std::string& line, std::size_t lineno) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    while (end && (*end == ' ' || *end == '\r')) ++end;
    if (end == begin || *end != '\0') {
      throw InputError("stdin line " + std::to_string(lineno) + ": '" + cell + "' is not a number");
    }
    row.push_back(v);
  }
  return row;
}

// ------------------------------------------------------------ commands

struct ValueArgs {
  std::string mu, nu, out, backend = "exact";
  std::size_t grid = QuantileGrid::kDefaultCount;
  double epsilon = 0.01;
  std::size_t max_iter = 100000;
};

int cmd_value(const ValueArgs& a, std::ostream& out) {
  const ExchangeableMixture mu = load_mixture(a.mu);
  const ExchangeableMixture nu = load_mixture(a.nu);
  OuterOptions opt;
  if (a.backend == "entropic") {
    opt.backend = Backend::entropic;
    if (!(a.epsilon > 0.0)) throw InputError("--epsilon must be positive");
  }
  opt.epsilon = a.epsilon;
  opt.max_iter = a.max_iter;
  const QuantileGrid grid(a.grid);
  const auto dir = prepare_out_dir(a.out);

  const NestedValue result = exchangeable_value(mu, nu, grid, opt);
  out << "value " << twelve_digits(result.value) << '\n';
  if (dir) {
    std::ostringstream csv;
    write_coupling_csv(csv, result.coupling, result.cost);
    write_file_atomic(*dir / "coupling.csv", csv.str());
  }
  return kOk;
}

struct MapArgs {
  std::string mu, nu, out;
  std::size_t grid = QuantileGrid::kDefaultCount;
  bool use_stdin = false;
};

int cmd_map(const MapArgs& a, std::istream& in, std::ostream& out) {
  const ExchangeableMixture mu = load_mixture(a.mu);
  const ExchangeableMixture nu = load_mixture(a.nu);
  const QuantileGrid grid(a.grid);
  const auto dir = prepare_out_dir(a.out);
  std::vector<std::vector<double>> rows;
  if (a.use_stdin) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      rows.push_back(parse_csv_row(line, lineno));
    }
  }

  const NestedValue value = exchangeable_value(mu, nu, grid);
  const SolvabilityVerdict verdict = monge_solvability(mu, nu, value.coupling);
  const json vj = verdict_to_json(verdict);
  out << vj.dump() << '\n';
  if (dir) write_file_atomic(*dir / "verdict.json", vj.dump(2) + "\n");
  const auto* map = std::get_if<ExchangeableMap>(&verdict);
  if (!map) throw MongeInfeasible{};
  for (const auto& row : rows) {
    const auto mapped = apply_exchangeable_map(*map, mu, row);
    for (std::size_t i = 0; i < mapped.size(); ++i) out << (i ? "," : "") << format_double(mapped[i]);
    out << '\n';
  }
  return kOk;
}

struct ApproxArgs {
  std::string mu, nu, out, n_list = "1,2,4,8";
  std::size_t samples = 500, reps = kDefaultReplications;
  std::size_t grid = QuantileGrid::kDefaultCount;
  std::uint64_t seed = 0;
};

int cmd_approx(const ApproxArgs& a, std::ostream& out) {
  const ExchangeableMixture mu = load_mixture(a.mu);
  const ExchangeableMixture nu = load_mixture(a.nu);
  const auto n_list = parse_n_list(a.n_list);
  if (a.samples == 0) throw InputError("--samples must be positive");
  if (a.reps < 2) throw InputError("--reps must be at least 2");
  const QuantileGrid grid(a.grid);
  const auto dir = prepare_out_dir(a.out);

  const ConvergenceTable table = convergence_experiment(mu, nu, n_list, a.samples, a.reps, a.seed, grid);
  std::ostringstream csv;
  write_convergence_csv(csv, table);
  out << csv.str();
  out << "spearman " << format_double(table.spearman_of_means) << '\n';
  if (dir) {
    LineChart chart;
    chart.title = "Finite-dimensional value estimates";
    chart.x_label = "n";
    chart.y_label = "K_n estimate";
    ChartSeries s;
    s.label = "mean +/- 95% CI";
    for (const auto& r : table.rows) {
      s.x.push_back(static_cast<double>(r.n));
      s.y.push_back(r.mean);
      s.err.push_back(r.half_width);
    }
    chart.series.push_back(std::move(s));
    chart.reference = table.reference;
    chart.reference_label = "nested value " + format_double(table.reference);
    write_file_atomic(*dir / "convergence.csv", csv.str());
    write_file_atomic(*dir / "convergence.svg", render_svg(chart));
  }
  return kOk;
}

struct AuditArgs {
  std::optional<double> sigma2, rho;
  bool counterexample = false;
  double curvature = 1.0;
  std::string n_list = "1,2,4,8,16", out;
};

int cmd_audit(const AuditArgs& a, std::ostream& out) {
  const auto n_list = parse_n_list(a.n_list);
  std::optional<ExchangeableGaussian> family;
  if (a.counterexample) {
    if (a.sigma2 || a.rho) throw InputError("--counterexample excludes --sigma2/--rho");
    family = counterexample_projection(PotentialSpec{"quadratic", a.curvature, 0.0}, n_list.front());
  } else {
    if (!a.rho) throw InputError("--rho or --counterexample is required");
    family.emplace(a.sigma2.value_or(1.0), *a.rho);
  }
  const auto dir = prepare_out_dir(a.out);

  const ModulusCurve curve = modulus_curve(*family, n_list);
  const bool uniform = uniform_over_tested_range(curve);
  std::ostringstream csv;
  write_modulus_csv(csv, curve);
  out << csv.str();
  out << "uniform: " << (uniform ? "yes" : "no") << '\n';
  if (dir) {
    LineChart chart;
    chart.title = "Uniform log-concavity modulus of projections";
    chart.x_label = "n";
    chart.y_label = "kappa_n";
    ChartSeries s;
    s.label = "kappa_n";
    for (const auto& p : curve.points) {
      s.x.push_back(static_cast<double>(p.n));
      s.y.push_back(p.kappa);
    }
    chart.series.push_back(std::move(s));
    write_file_atomic(*dir / "modulus.csv", csv.str());
    write_file_atomic(*dir / "modulus.svg", render_svg(chart));
    write_file_atomic(*dir / "audit.json", audit_summary(*family, n_list).dump(2) + "\n");
  }
  return kOk;
}

struct CaffarelliArgs {
  std::string source, target;
  double c_upper = 0.0, c_lower = 0.0;
  std::size_t probes = 1000;
  std::uint64_t seed = 0;
};

int cmd_caffarelli(const CaffarelliArgs& a, std::ostream& out) {
  const Dist1D source = load_law(a.source);
  const Dist1D target = load_law(a.target);
  if (!(a.c_upper > 0.0) || !(a.c_lower > 0.0)) throw InputError("--C and --c must be positive");
  if (a.probes < 2) throw InputError("--probes must be at least 2");
  const LipschitzReport r = caffarelli_check(source, target, a.c_upper, a.c_lower, a.probes, a.seed);
  json j{{"estimate", r.estimate}, {"bound", r.bound ? json(*r.bound) : json(nullptr)}, {"satisfied", r.satisfied}};
  out << j.dump() << '\n';
  return r.satisfied ? kOk : kSolver;
}

void report(std::ostream& err, const std::string& kind, const std::string& message, const std::string& file = {},
            const std::string& path = {}) {
  json j{{"error", kind}, {"message", message}};
  if (!file.empty()) j["file"] = file;
  if (!path.empty()) j["path"] = path;
  err << j.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exchangeable optimal transport between finite de Finetti mixtures"};
  app.require_subcommand(1);

  ValueArgs va;
  auto* value = app.add_subcommand("value", "nested optimal transport value");
  value->add_option("mu", va.mu, "source mixture JSON")->required();
  value->add_option("nu", va.nu, "target mixture JSON")->required();
  value->add_option("--grid", va.grid, "quantile grid size");
  value->add_option("--backend", va.backend, "outer solver")->check(CLI::IsMember({"exact", "entropic"}));
  value->add_option("--epsilon", va.epsilon, "entropic regularization");
  value->add_option("--max-iter", va.max_iter, "entropic iteration cap");
  value->add_option("--out", va.out, "output directory for coupling.csv");

  MapArgs ma;
  auto* map = app.add_subcommand("map", "Monge solvability and the exchangeable map");
  map->add_option("mu", ma.mu)->required();
  map->add_option("nu", ma.nu)->required();
  map->add_option("--grid", ma.grid);
  map->add_flag("--stdin", ma.use_stdin, "transform CSV prefixes read from stdin");
  map->add_option("--out", ma.out);

  ApproxArgs aa;
  auto* approx = app.add_subcommand("approx", "finite-dimensional convergence experiment");
  approx->add_option("mu", aa.mu)->required();
  approx->add_option("nu", aa.nu)->required();
  approx->add_option("--n-list", aa.n_list);
  approx->add_option("--samples", aa.samples);
  approx->add_option("--reps", aa.reps);
  approx->add_option("--seed", aa.seed)->required();
  approx->add_option("--grid", aa.grid);
  approx->add_option("--out", aa.out);

  AuditArgs ua;
  auto* audit = app.add_subcommand("audit", "log-concavity moduli of exchangeable Gaussian projections");
  audit->add_option("--sigma2", ua.sigma2);
  audit->add_option("--rho", ua.rho);
  audit->add_flag("--counterexample", ua.counterexample, "shared-shift family with covariance I + 11^T");
  audit->add_option("--curvature", ua.curvature, "curvature of the quadratic potential");
  audit->add_option("--n-list", ua.n_list);
  audit->add_option("--out", ua.out);

  CaffarelliArgs ca;
  auto* caff = app.add_subcommand("caffarelli", "contraction bound check for a 1D monotone map");
  caff->add_option("source", ca.source)->required();
  caff->add_option("target", ca.target)->required();
  caff->add_option("--C", ca.c_upper, "upper curvature bound of the source potential")->required();
  caff->add_option("--c", ca.c_lower, "lower curvature bound of the target potential")->required();
  caff->add_option("--probes", ca.probes);
  caff->add_option("--seed", ca.seed)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what());
    return kInput;
  }

  try {
    if (value->parsed()) return cmd_value(va, out);
    if (map->parsed()) return cmd_map(ma, in, out);
    if (approx->parsed()) return cmd_approx(aa, out);
    if (audit->parsed()) return cmd_audit(ua, out);
    if (caff->parsed()) return cmd_caffarelli(ca, out);
  } catch (const MongeInfeasible&) {
    return kMongeInfeasible;
  } catch (const FileInputError& e) {
    report(err, "input", e.what(), e.file(), e.path());
    return kInput;
  } catch (const InputError& e) {
    report(err, "input", e.what(), {}, e.path());
    return kInput;
  } catch (const DomainError& e) {
    report(err, "input", e.what());
    return kInput;
  } catch (const SolverError& e) {
    report(err, "solver", e.what());
    return kSolver;
  } catch (const std::exception& e) {
    report(err, "internal", e.what());
    return kSolver;
  }
  return kUsage;
}

}  // namespace exot::cli
