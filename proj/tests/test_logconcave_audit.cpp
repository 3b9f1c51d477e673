#include <doctest.h>

#include <cmath>
#include <sstream>

#include "exot/error.hpp"
#include "exot/logconcave_audit.hpp"

using namespace exot;

namespace {

double gaussian_density(std::span<const double> x) {
  double q = 0.0;
  for (double v : x) q += v * v;
  return std::exp(-0.5 * q);
}

}  // namespace

TEST_CASE("closed-form moduli") {
  const ExchangeableGaussian iid(1.0, 0.0), half(1.0, 0.5);
  for (std::size_t n : {1u, 7u, 64u}) CHECK(gaussian_modulus(iid, n) == 1.0);
  CHECK(gaussian_modulus(half, 4) == doctest::Approx(0.4).epsilon(1e-15));
  const ExchangeableGaussian cx = counterexample_projection(PotentialSpec{}, 3);
  CHECK(gaussian_modulus(cx, 3) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(gaussian_modulus(cx, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cx.diagonal_eigenvalue(1) == doctest::Approx(2.0));
}

TEST_CASE("numeric eigensolver agrees") {
  for (double rho : {0.0, 0.1, 0.5, 0.9}) {
    const ExchangeableGaussian g(1.7, rho);
    for (std::size_t n = 1; n <= 64; n += 9) CHECK(std::abs(numeric_gaussian_modulus(g, n) - gaussian_modulus(g, n)) <= 1e-10);
  }
}

TEST_CASE("counterexample family") {
  for (std::size_t n = 1; n <= 16; ++n) {
    const ExchangeableGaussian g = counterexample_projection(PotentialSpec{}, n);
    CHECK(gaussian_modulus(g, n) == doctest::Approx(1.0 / static_cast<double>(n + 1)).epsilon(1e-14));
    CHECK(gaussian_modulus(g, n) > 0.0);
  }
  const ExchangeableGaussian steep = counterexample_projection(PotentialSpec{"quadratic", 4.0, 1.0}, 2);
  CHECK(steep.sigma2() == doctest::Approx(1.25));
  CHECK(steep.mean_shift() == 1.0);
  CHECK_THROWS_AS(counterexample_projection(PotentialSpec{"quartic", 1.0, 0.0}, 2), DomainError);
  CHECK_THROWS_AS(counterexample_projection(PotentialSpec{"quadratic", 0.0, 0.0}, 2), InputError);
}

TEST_CASE("grid Hessian modulus") {
  const double h = 0.1;
  const auto g2 = grid_hessian_modulus(gaussian_density, Box{{-2, -2}, {2, 2}}, 40);
  CHECK(std::abs(g2.modulus - 1.0) <= 2.0 * h * h);
  CHECK(g2.log_concave);

  const auto bimodal = grid_hessian_modulus(
      [](std::span<const double> x) {
        return 0.5 * std::exp(-0.5 * (x[0] - 3) * (x[0] - 3)) + 0.5 * std::exp(-0.5 * (x[0] + 3) * (x[0] + 3));
      },
      Box{{-6}, {6}}, 120);
  CHECK(bimodal.modulus < 0.0);
  CHECK_FALSE(bimodal.log_concave);

  // Counterexample at n = 2: covariance I + 11^T, precision I - 11^T / 3.
  const auto cx = grid_hessian_modulus(
      [](std::span<const double> x) {
        const double s = x[0] + x[1];
        return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] - s * s / 3.0));
      },
      Box{{-2, -2}, {2, 2}}, 40);
  CHECK(std::abs(cx.modulus - 1.0 / 3.0) <= 2.0 * h * h);
  CHECK(std::abs(cx.direction[0] - cx.direction[1]) < 1e-15);

  CHECK_THROWS_AS(grid_hessian_modulus([](std::span<const double>) { return 0.0; }, Box{{-1}, {1}}, 10),
                  DomainError);
  CHECK_THROWS_AS(grid_hessian_modulus(gaussian_density, Box{{-1, -1, -1, -1}, {1, 1, 1, 1}}, 4), InputError);
}

TEST_CASE("grid Hessian modulus converges at second order") {
  // V = x^2/2 + x^4/12, V'' = 1 + x^2, minimum 1 at the origin.
  auto density = [](std::span<const double> x) { return std::exp(-(x[0] * x[0] / 2 + std::pow(x[0], 4) / 12)); };
  double err[3];
  std::size_t res = 20;
  for (double& e : err) {
    e = grid_hessian_modulus(density, Box{{-1}, {1}}, res).modulus - 1.0;
    res *= 2;
  }
  for (int i = 0; i < 2; ++i) {
    const double ratio = err[i] / err[i + 1];
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
}

TEST_CASE("projection bounds") {
  const auto flat = projection_bounds_check(ExchangeableGaussian(2.0, 0.0), {1, 2, 4});
  for (const auto& r : flat.rows) {
    CHECK(r.kappa == 0.5);
    CHECK(r.upper == 0.5);
  }
  CHECK(flat.lower_preserved);
  CHECK(flat.upper_preserved);

  const auto half = projection_bounds_check(ExchangeableGaussian(1.0, 0.5), {1, 2, 4});
  CHECK(half.rows[0].kappa == doctest::Approx(1.0));
  CHECK(half.rows[1].kappa == doctest::Approx(1.0 / 1.5));
  CHECK(half.rows[2].kappa == doctest::Approx(1.0 / 2.5));
  CHECK(half.rows[0].kappa > half.rows[1].kappa);
  CHECK(half.rows[1].kappa > half.rows[2].kappa);
  CHECK(half.lower_preserved);
  CHECK(half.upper_preserved);
  CHECK(half.max_numeric_error <= 1e-10);

  const auto cx = projection_bounds_check(counterexample_projection(PotentialSpec{}, 1), {1, 2, 3});
  CHECK(cx.rows[0].kappa == doctest::Approx(0.5));
  CHECK(cx.rows[1].kappa == doctest::Approx(1.0 / 3.0));
  CHECK(cx.rows[2].kappa == doctest::Approx(0.25));
}

TEST_CASE("uniformity verdict and rate") {
  for (double rho : {0.0, 0.25, 0.5}) {
    const ExchangeableGaussian g(1.5, rho);
    const ModulusCurve c = modulus_curve(g, {1, 2, 4, 8, 16, 32, 64});
    CHECK(uniform_over_tested_range(c) == (rho == 0.0));
    if (rho > 0.0) {
      CHECK(extrapolated_rate(c) == doctest::Approx(1.0 / (1.5 * rho)).epsilon(1e-10));
    } else {
      CHECK(std::isinf(extrapolated_rate(c)));
    }
  }
  CHECK_THROWS_AS(extrapolated_rate(ModulusCurve{{{1, 1.0}}}), InputError);
}

TEST_CASE("csv and summary") {
  const ExchangeableGaussian cx = counterexample_projection(PotentialSpec{}, 1);
  std::ostringstream os;
  write_modulus_csv(os, modulus_curve(cx, {1, 3}));
  CHECK(os.str() == "n,kappa\n1,0.5\n3,0.25\n");
  const auto j = audit_summary(cx, {1, 2, 3});
  CHECK(j["uniform"] == false);
  CHECK(j["log_concave_every_n"] == true);
  CHECK(j["n_kappa_limit"].get<double>() == doctest::Approx(1.0));
  CHECK(j["numeric_max_error"].get<double>() <= 1e-10);
}
