#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "exot/dist1d.hpp"
#include "exot/error.hpp"
#include "exot/rng.hpp"

using namespace exot;

namespace {

std::vector<Dist1D> sample_laws() {
  return {Dist1D::gaussian(0.5, 1.7), Dist1D::uniform(-1.0, 3.0),
          Dist1D::empirical({-1.0, 0.0, 0.0, 2.5}, {0.1, 0.2, 0.3, 0.4}),
          Dist1D::grid({-2.0, -1.0, 0.0, 1.0, 2.0}, {2.0, 0.5, 0.0, 0.7, 2.2})};
}

}  // namespace

TEST_CASE("cdf examples") {
  CHECK(cdf(Dist1D::empirical({0.0, 1.0}, {0.5, 0.5}), 0.5) == 0.5);
  CHECK(cdf(Dist1D::gaussian(0.0, 1.0), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cdf(Dist1D::uniform(0.0, 2.0), 0.5) == 0.25);
  CHECK(sf(Dist1D::gaussian(0.0, 1.0), 30.0) > 0.0);
}

TEST_CASE("quantile uses the strict generalized inverse") {
  const auto e = Dist1D::empirical({0.0, 1.0}, {0.5, 0.5});
  CHECK(quantile(e, 0.25) == 0.0);
  CHECK(quantile(e, 0.5) == 1.0);
  CHECK(quantile(Dist1D::gaussian(2.0, 3.0), 0.5) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(quantile(e, 0.0), InputError);
  CHECK_THROWS_AS(quantile(e, 1.0), InputError);
}

TEST_CASE("quantile and cdf are Galois-connected") {
  Rng rng(11);
  for (const auto& d : sample_laws()) {
    for (int i = 0; i < 1000; ++i) {
      const double t = rng.uniform();
      CHECK(cdf(d, quantile(d, t)) >= t - 1e-12);
    }
    if (const auto* e = d.as<Empirical>()) {
      // At an atom the strict inverse jumps to the next atom; just below
      // the jump it returns the atom itself.
      for (std::size_t i = 0; i + 1 < e->atoms().size(); ++i) {
        const double s = e->atoms()[i], f = cdf(d, s);
        if (e->atoms()[i + 1] > s) CHECK(quantile(d, f) == e->atoms()[i + 1]);
        CHECK(quantile(d, f - 1e-9) <= s);
      }
    } else {
      for (int i = 0; i < 200; ++i) {
        const double s = quantile(d, 0.01 + 0.98 * rng.uniform());
        CHECK(quantile(d, cdf(d, s)) <= s + 1e-9 * (1.0 + std::abs(s)));
      }
    }
  }
}

TEST_CASE("quantile is nondecreasing") {
  Rng rng(12);
  for (const auto& d : sample_laws()) {
    for (int i = 0; i < 1000; ++i) {
      double a = rng.uniform(), b = rng.uniform();
      if (a > b) std::swap(a, b);
      CHECK(quantile(d, a) <= quantile(d, b));
    }
  }
}

TEST_CASE("empirical quantiles on a matching grid reproduce the atoms") {
  const std::vector<double> atoms{-3.0, -1.0, 0.25, 0.25, 2.0, 7.5};
  const auto d = Dist1D::empirical(atoms);
  CHECK(quantiles_on(d, QuantileGrid(atoms.size())) == atoms);
}

TEST_CASE("upper quantile agrees with quantile away from the tail") {
  for (const auto& d : sample_laws()) {
    for (double u : {0.9, 0.7, 0.35, 0.05}) CHECK(upper_quantile(d, u) == doctest::Approx(quantile(d, 1.0 - u)));
  }
  CHECK(upper_quantile(Dist1D::gaussian(0.0, 1.0), 1e-300) > 37.0);
}

TEST_CASE("sampling") {
  CHECK(sample(Dist1D::point_mass(7.0), 99, 3) == std::vector<double>{7.0, 7.0, 7.0});

  const auto g = sample(Dist1D::gaussian(0.0, 1.0), 42, 10000);
  CHECK(std::abs(std::accumulate(g.begin(), g.end(), 0.0) / 1e4) < 0.05);

  auto u = sample(Dist1D::uniform(0.0, 1.0), 1, 10000);
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    ks = std::max({ks, std::abs(u[i] - static_cast<double>(i) / 1e4), std::abs(static_cast<double>(i + 1) / 1e4 - u[i])});
  }
  CHECK(ks < 0.02);

  CHECK(sample(Dist1D::gaussian(1.0, 2.0), 5, 100) == sample(Dist1D::gaussian(1.0, 2.0), 5, 100));
  CHECK(sample(Dist1D::gaussian(1.0, 2.0), 5, 100) != sample(Dist1D::gaussian(1.0, 2.0), 6, 100));
}

TEST_CASE("second moments") {
  CHECK(second_moment(Dist1D::gaussian(1.5, 2.0)) == doctest::Approx(1.5 * 1.5 + 4.0));
  CHECK(second_moment(Dist1D::empirical({-1.0, 1.0}, {0.5, 0.5})) == 1.0);
  CHECK(second_moment(Dist1D::uniform(0.0, 1.0)) == doctest::Approx(1.0 / 3.0));

  const QuantileGrid grid;
  for (const auto& d : {Dist1D::gaussian(0.3, 1.2), Dist1D::uniform(-2.0, 5.0)}) {
    double m2 = 0.0;
    for (double q : quantiles_on(d, grid)) m2 += q * q;
    m2 *= grid.step();
    CHECK(std::abs(m2 - second_moment(d)) <= 1e-4 * second_moment(d));
  }
}

TEST_CASE("grid potential is a normalized law") {
  const auto d = Dist1D::grid({-1.0, 0.0, 2.0}, {1.0, 0.0, 3.0});
  CHECK(cdf(d, -1e9) == doctest::Approx(0.0));
  CHECK(cdf(d, 1e9) == doctest::Approx(1.0));
  for (double t : {0.01, 0.3, 0.5, 0.77, 0.999}) CHECK(cdf(d, quantile(d, t)) == doctest::Approx(t).epsilon(1e-12));
  CHECK(cdf(d, 0.7) + sf(d, 0.7) == doctest::Approx(1.0));

  // Standard Gaussian potential on a fine grid.
  std::vector<double> xs, vs;
  for (int i = -800; i <= 800; ++i) {
    xs.push_back(i * 0.01);
    vs.push_back(0.5 * xs.back() * xs.back());
  }
  const auto g = Dist1D::grid(xs, vs);
  CHECK(second_moment(g) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(mean(g) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(cdf(g, 1.0) == doctest::Approx(cdf(Dist1D::gaussian(0.0, 1.0), 1.0)).epsilon(1e-4));
}

TEST_CASE("grid potential rejects bad input") {
  CHECK_THROWS_AS(Dist1D::grid({0.0}, {0.0}), InputError);
  CHECK_THROWS_AS(Dist1D::grid({0.0, 0.0, 1.0}, {0.0, 1.0, 2.0}), InputError);
  CHECK_THROWS_AS(Dist1D::grid({0.0, 1.0}, {0.0}), InputError);
  CHECK_THROWS_AS(Dist1D::grid({0.0, 1.0, 2.0}, {1.0, 0.0, -1.0}), DomainError);
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(Dist1D::gaussian(0.0, 0.0), InputError);
  CHECK_THROWS_AS(Dist1D::uniform(1.0, 1.0), InputError);
  CHECK_THROWS_AS(Dist1D::empirical({}, {}), InputError);
  const auto shuffled = Dist1D::empirical({2.0, -1.0, 0.5}, {0.5, 0.2, 0.3});
  CHECK(shuffled.as<Empirical>()->atoms() == std::vector<double>{-1.0, 0.5, 2.0});
  CHECK(shuffled.as<Empirical>()->weights() == std::vector<double>{0.2, 0.3, 0.5});
  CHECK_THROWS_AS(Dist1D::empirical({0.0, 1.0}, {0.5, 0.6}), InputError);
  CHECK_THROWS_AS(Dist1D::empirical({0.0, 1.0}, {1.0, 0.0}), InputError);
  CHECK_THROWS_AS(QuantileGrid(0), InputError);
}

TEST_CASE("log-concavity moduli") {
  CHECK(logconcavity_modulus(Dist1D::gaussian(0.0, 2.0)).kappa == doctest::Approx(0.25));
  CHECK(logconcavity_modulus(Dist1D::uniform(0.0, 1.0)).kappa == 0.0);
  CHECK(logconcavity_modulus(Dist1D::uniform(0.0, 1.0)).log_concave);
  CHECK_THROWS_WITH_AS(logconcavity_modulus(Dist1D::point_mass(1.0)), "no density", DomainError);

  double previous = 1.0;
  for (double h : {0.1, 0.05, 0.025}) {
    std::vector<double> xs, vs;
    const int half = static_cast<int>(std::lround(2.0 / h));
    for (int i = -half; i <= half; ++i) {
      xs.push_back(i * h);
      vs.push_back(std::pow(xs.back(), 4));
    }
    const LogConcavity lc = logconcavity_modulus(Dist1D::grid(xs, vs));
    CHECK(lc.log_concave);
    CHECK(lc.kappa >= 0.0);
    CHECK(lc.kappa <= 2.0 * h * h + 1e-9);
    CHECK(lc.kappa < previous);
    previous = lc.kappa;
  }
}

TEST_CASE("non-log-concave grid reports a witness") {
  std::vector<double> xs, vs;
  for (int i = -300; i <= 300; ++i) {
    const double x = i * 0.02;
    xs.push_back(x);
    vs.push_back(-std::log(0.5 * std::exp(-0.5 * (x - 3) * (x - 3)) + 0.5 * std::exp(-0.5 * (x + 3) * (x + 3))));
  }
  const LogConcavity lc = logconcavity_modulus(Dist1D::grid(xs, vs));
  CHECK_FALSE(lc.log_concave);
  CHECK(std::isinf(lc.kappa));
  REQUIRE(lc.witness.has_value());
  CHECK(std::abs(*lc.witness) < 0.05);
}

TEST_CASE("json round trip and error paths") {
  for (const auto& d : sample_laws()) {
    const Dist1D back = dist_from_json(to_json(d));
    CHECK(to_json(back) == to_json(d));
  }
  const auto j = nlohmann::json::parse(R"({"kind":"empirical","atoms":[1,2]})");
  CHECK(dist_from_json(j).as<Empirical>()->weights() == std::vector<double>{0.5, 0.5});
  try {
    dist_from_json(nlohmann::json::parse(R"({"kind":"gaussian","mean":0})"), "/components/1");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(e.path() == "/components/1/std");
  }
  CHECK_THROWS_AS(dist_from_json(nlohmann::json::parse(R"({"kind":"cauchy"})")), InputError);
}
