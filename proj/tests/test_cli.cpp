#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "exot/cli.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using oracle::fixture;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args, const std::string& input = {}) {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = exot::cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("exot_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

TEST_CASE("value") {
  auto r = run({"value", fixture("mixture_pm1.json"), fixture("mixture_pm1.json")});
  CHECK(r.code == 0);
  CHECK(r.out == "value 0.0\n");

  const fs::path dir = scratch("value");
  r = run({"value", fixture("mixture_pm1.json"), fixture("mixture_pm2.json"), "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out == "value 1.0\n");
  CHECK(slurp(dir / "coupling.csv") == "i,j,mass,cost\n0,0,0.5,1.0\n1,1,0.5,1.0\n");
  CHECK(listing(dir) == std::vector<std::string>{"coupling.csv"});

  r = run({"value", fixture("mixture_pm1.json"), fixture("mixture_pm2.json"), "--backend", "entropic", "--epsilon",
           "0.05"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("value 1.0", 0) == 0);
}

TEST_CASE("input errors") {
  auto r = run({"value", fixture("bad_weights.json"), fixture("mixture_pm2.json")});
  CHECK(r.code == 2);
  const auto j = nlohmann::json::parse(r.err);
  CHECK(j["error"] == "input");
  CHECK(j["path"] == "/weights");
  CHECK(j["message"] == "weights sum 1.1");
  CHECK(j["file"].get<std::string>().find("bad_weights.json") != std::string::npos);

  r = run({"value", fixture("missing.json"), fixture("mixture_pm2.json")});
  CHECK(r.code == 2);
  r = run({"value", fixture("mixture_pm1.json")});
  CHECK(r.code == 2);
  CHECK(nlohmann::json::parse(r.err)["error"] == "usage");
  r = run({"frobnicate"});
  CHECK(r.code == 2);
  r = run({"value", fixture("mixture_pm1.json"), fixture("mixture_pm2.json"), "--backend", "simplex"});
  CHECK(r.code == 2);
  r = run({"approx", fixture("product_std.json"), fixture("product_unit_shift.json")});
  CHECK(r.code == 2);
  r = run({"--help"});
  CHECK(r.code == 0);
}

TEST_CASE("solver errors") {
  const auto r = run({"value", fixture("mixture_three.json"), fixture("mixture_pm2.json"), "--backend", "entropic",
                      "--epsilon", "0.0001", "--max-iter", "2"});
  CHECK(r.code == 3);
  CHECK(nlohmann::json::parse(r.err)["error"] == "solver");
}

TEST_CASE("map") {
  auto r = run({"map", fixture("product_std.json"), fixture("mixture_pm1.json")});
  CHECK(r.code == 4);
  const auto v = nlohmann::json::parse(r.out);
  CHECK(v["solvable"] == false);
  CHECK(v["witness"] == nlohmann::json::array({0.5, 0.5}));

  r = run({"map", fixture("mixture_pm1.json"), fixture("mixture_pm1.json"), "--stdin"}, "0.2,-1.0\n1.5,2.5,3.0\n");
  CHECK(r.code == 0);
  CHECK(r.out.substr(r.out.find('\n') + 1) == "0.2,-1.0\n1.5,2.5,3.0\n");

  r = run({"map", fixture("product_std.json"), fixture("product_shift.json"), "--stdin"}, "0.2,-1.0\n");
  CHECK(r.code == 0);
  CHECK(r.out.substr(r.out.find('\n') + 1) == "3.2,2.0\n");

  r = run({"map", fixture("product_std.json"), fixture("product_shift.json"), "--stdin"}, "0.2,abc\n");
  CHECK(r.code == 2);
  CHECK(r.out.empty());
}

TEST_CASE("approx writes deterministic outputs") {
  const fs::path a = scratch("approx_a"), b = scratch("approx_b");
  const std::vector<std::string> base{"approx", fixture("product_std.json"), fixture("product_unit_shift.json"),
                                      "--n-list", "1,2", "--samples", "40", "--reps", "3", "--seed", "5",
                                      "--grid", "4096", "--out"};
  auto args = base;
  args.push_back(a.string());
  const auto r1 = run(args);
  args.back() = b.string();
  const auto r2 = run(args);
  CHECK(r1.code == 0);
  CHECK(r1.out == r2.out);
  CHECK(slurp(a / "convergence.csv") == slurp(b / "convergence.csv"));
  CHECK(slurp(a / "convergence.svg") == slurp(b / "convergence.svg"));
  CHECK(slurp(a / "convergence.svg").find("viewBox=\"0 0 800 600\"") != std::string::npos);
  CHECK(listing(a) == std::vector<std::string>{"convergence.csv", "convergence.svg"});
}

TEST_CASE("validation happens before any output") {
  const fs::path dir = scratch("invalid");
  const auto r = run({"approx", fixture("product_std.json"), fixture("product_unit_shift.json"), "--n-list", "2,1",
                      "--seed", "1", "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(dir));
  CHECK(r.out.empty());
}

TEST_CASE("audit") {
  auto r = run({"audit", "--rho", "0", "--n-list", "1,2,4"});
  CHECK(r.code == 0);
  CHECK(r.out == "n,kappa\n1,1.0\n2,1.0\n4,1.0\nuniform: yes\n");

  const fs::path dir = scratch("audit");
  r = run({"audit", "--counterexample", "--n-list", "1,2,3", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out == "n,kappa\n1,0.5\n2,0.3333333333333333\n3,0.25\nuniform: no\n");
  CHECK(listing(dir) == std::vector<std::string>{"audit.json", "modulus.csv", "modulus.svg"});
  CHECK(nlohmann::json::parse(slurp(dir / "audit.json"))["uniform"] == false);

  CHECK(run({"audit", "--counterexample", "--rho", "0.5"}).code == 2);
  CHECK(run({"audit", "--rho", "1.5"}).code == 2);
}

TEST_CASE("caffarelli") {
  auto r = run({"caffarelli", fixture("caffarelli_source.json"), fixture("caffarelli_target.json"), "--C", "1", "--c",
                "4", "--seed", "3"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["satisfied"] == true);
  CHECK(j["estimate"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));

  r = run({"caffarelli", fixture("caffarelli_source.json"), fixture("caffarelli_target.json"), "--C", "1", "--c",
           "5", "--seed", "3"});
  CHECK(r.code == 2);
  CHECK(nlohmann::json::parse(r.err)["message"].get<std::string>().rfind("target", 0) == 0);
}

TEST_CASE("installed binary exit codes") {
  CHECK(oracle::run_cli("map " + fixture("product_std.json") + " " + fixture("mixture_pm1.json")).status == 4);
  const auto shift = oracle::run_cli(
      "map " + fixture("product_std.json") + " " + fixture("product_shift.json") + " --stdin", "0.2,-1.0\\n");
  CHECK(shift.status == 0);
  CHECK(shift.out.substr(shift.out.find('\n') + 1) == "3.2,2.0\n");
  CHECK(oracle::run_cli("value " + fixture("bad_weights.json") + " " + fixture("mixture_pm1.json")).status == 2);
}
