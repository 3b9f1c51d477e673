#include <doctest.h>

#include <cmath>
#include <sstream>

#include "exot/definetti.hpp"
#include "exot/error.hpp"
#include "exot/findim_approx.hpp"
#include "exot/outer_ot.hpp"
#include "exot/rng.hpp"
#include "oracles.hpp"

using namespace exot;

TEST_CASE("projection blocks") {
  const auto one = project(ExchangeableMixture(Dist1D::gaussian(0.0, 1.0)), 3);
  REQUIRE(one.size() == 1);
  CHECK(one[0].weight == 1.0);
  CHECK(one[0].multiplicity == 3);

  const ExchangeableMixture two({Dist1D::gaussian(-1.0, 1.0), Dist1D::uniform(0.0, 1.0), Dist1D::point_mass(4.0)},
                                {0.2, 0.3, 0.5});
  const auto blocks = project(two, 5);
  REQUIRE(blocks.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(blocks[k].weight == two.weight(k));
    CHECK(blocks[k].component == k);
    CHECK(blocks[k].multiplicity == 5);
  }
  CHECK_THROWS_AS(project(two, 0), InputError);
}

TEST_CASE("mixture validation") {
  CHECK_THROWS_WITH_AS(ExchangeableMixture({Dist1D::gaussian(0, 1), Dist1D::gaussian(1, 1)}, {0.5, 0.6}),
                       "weights sum 1.1", InputError);
  CHECK_THROWS_AS(ExchangeableMixture({}, {}), InputError);
  CHECK_THROWS_AS(ExchangeableMixture({Dist1D::gaussian(0, 1)}, {0.5, 0.5}), InputError);
  CHECK_THROWS_AS(ExchangeableMixture({Dist1D::gaussian(0, 1), Dist1D::gaussian(1, 1)}, {1.0, 0.0}), InputError);
  CHECK_NOTHROW(ExchangeableMixture({Dist1D::gaussian(0, 1), Dist1D::gaussian(1, 1)}, {0.3, 0.7}));
}

TEST_CASE("prefix sampling") {
  const PrefixSample pm = sample_prefix(ExchangeableMixture(Dist1D::point_mass(2.5)), 4, 10, 1);
  for (double v : pm.values) CHECK(v == 2.5);

  const ExchangeableMixture bern({Dist1D::point_mass(0.0), Dist1D::point_mass(1.0)}, {0.3, 0.7});
  const PrefixSample b = sample_prefix(bern, 1, 10000, 8);
  double ones = 0.0;
  for (double v : b.values) ones += v;
  CHECK(std::abs(ones / 1e4 - 0.7) <= 3.0 * std::sqrt(0.21 / 1e4));

  // Leading coordinates do not depend on n.
  const ExchangeableMixture mix({Dist1D::gaussian(-1, 1), Dist1D::gaussian(1, 1)}, {0.5, 0.5});
  const PrefixSample s2 = sample_prefix(mix, 2, 50, 3), s5 = sample_prefix(mix, 5, 50, 3);
  for (std::size_t r = 0; r < 50; ++r) {
    CHECK(s2.row(r)[0] == s5.row(r)[0]);
    CHECK(s2.row(r)[1] == s5.row(r)[1]);
    CHECK(s2.component_labels[r] == s5.component_labels[r]);
  }
  CHECK(sample_prefix(mix, 3, 20, 4).values == sample_prefix(mix, 3, 20, 4).values);
}

TEST_CASE("classification") {
  const ExchangeableMixture single(Dist1D::gaussian(0.0, 1.0));
  const std::vector<double> row{0.3, -2.0, 5.0};
  CHECK(classify_component(single, row) == 0);

  const ExchangeableMixture far({Dist1D::gaussian(-10, 1), Dist1D::gaussian(10, 1)}, {0.5, 0.5});
  const PrefixSample draws = sample_prefix(far, 20, 200, 17);
  for (std::size_t r = 0; r < draws.count; ++r) CHECK(classify_component(far, draws.row(r)) == draws.component_labels[r]);

  const ExchangeableMixture dup({Dist1D::gaussian(0, 1), Dist1D::gaussian(0, 1)}, {0.5, 0.5});
  CHECK(classify_component(dup, row) == 0);

  const ExchangeableMixture boxes({Dist1D::uniform(0, 1), Dist1D::uniform(2, 3)}, {0.5, 0.5});
  const std::vector<double> outside{0.5, 2.5};
  CHECK_THROWS_WITH_AS(classify_component(boxes, outside), "row outside all supports", DomainError);

  // Atoms outrank densities.
  const ExchangeableMixture atom({Dist1D::gaussian(0, 1), Dist1D::point_mass(0.0)}, {0.99, 0.01});
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(classify_component(atom, zeros) == 1);
}

TEST_CASE("classification accuracy improves with n") {
  const ExchangeableMixture mix({Dist1D::gaussian(-0.5, 1), Dist1D::gaussian(0.5, 1)}, {0.5, 0.5});
  double previous = 1.0;
  for (std::size_t n : {1u, 2u, 4u, 8u, 16u}) {
    const PrefixSample s = sample_prefix(mix, n, 10000, 23);
    std::size_t wrong = 0;
    for (std::size_t r = 0; r < s.count; ++r) wrong += classify_component(mix, s.row(r)) != s.component_labels[r];
    const double rate = static_cast<double>(wrong) / 1e4;
    CHECK(rate <= previous);
    previous = rate;
  }
}

TEST_CASE("coordinate law") {
  const ExchangeableMixture mix({Dist1D::gaussian(-1, 1), Dist1D::uniform(0, 2)}, {0.4, 0.6});
  for (double t : {0.01, 0.2, 0.5, 0.9}) CHECK(coordinate_cdf(mix, coordinate_quantile(mix, t)) == doctest::Approx(t));
  CHECK(coordinate_cdf(mix, 1.0) == doctest::Approx(0.4 * cdf(Dist1D::gaussian(-1, 1), 1.0) + 0.3));
}

TEST_CASE("parse and serialize") {
  const auto m = parse_mixture(std::string(R"({"weights":[1.0],"components":[{"kind":"gaussian","mean":0,"std":1}]})"));
  CHECK(m.size() == 1);

  try {
    parse_mixture(std::string(R"({"weights":[0.5,0.6],"components":[{"kind":"gaussian","mean":0,"std":1},
                                  {"kind":"uniform","lo":0,"hi":1}]})"));
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()) == "weights sum 1.1");
    CHECK(e.path() == "/weights");
  }
  try {
    parse_mixture(std::string(R"({"weights":[1.0],"components":[{"kind":"uniform","lo":2,"hi":1}]})"));
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(e.path().rfind("/components/0", 0) == 0);
  }
  CHECK_THROWS_AS(parse_mixture(std::string("not json")), InputError);

  const ExchangeableMixture three({Dist1D::gaussian(0.1, 2.0), Dist1D::uniform(-1, 1), Dist1D::empirical({0, 1, 3})},
                                  {0.2, 0.3, 0.5});
  const std::string text = serialize_mixture(three);
  CHECK(serialize_mixture(parse_mixture(text)) == text);
  CHECK(text.back() == '\n');
}

TEST_CASE("relabeling invariance") {
  Rng rng(31);
  const QuantileGrid grid(20000);
  for (int trial = 0; trial < 10; ++trial) {
    const ExchangeableMixture mu = oracle::random_mixture(rng, 4), nu = oracle::random_mixture(rng, 4);
    std::vector<Dist1D> comps(mu.components().rbegin(), mu.components().rend());
    std::vector<double> w(mu.weights().rbegin(), mu.weights().rend());
    const ExchangeableMixture flipped(comps, w);
    CHECK(std::abs(exchangeable_value(mu, nu, grid).value - exchangeable_value(flipped, nu, grid).value) <= 1e-12);
  }
}

TEST_CASE("symmetric statistics ignore coordinate order") {
  const ExchangeableMixture mu({Dist1D::gaussian(-1, 1), Dist1D::gaussian(1, 1)}, {0.5, 0.5});
  const ExchangeableMixture nu({Dist1D::gaussian(-2, 1), Dist1D::gaussian(2, 1)}, {0.5, 0.5});
  const PrefixSample x = sample_prefix(mu, 4, 60, 5), y = sample_prefix(nu, 4, 60, 6);
  const double before = empirical_value(x, y);
  PrefixSample x2 = x, y2 = y;
  for (std::size_t r = 0; r < x2.count; ++r) {
    std::swap(x2.row(r)[0], x2.row(r)[3]);
    std::swap(y2.row(r)[0], y2.row(r)[3]);
  }
  CHECK(empirical_value(x2, y2) == before);
}

TEST_CASE("prefix csv") {
  const PrefixSample s = sample_prefix(ExchangeableMixture(Dist1D::point_mass(1.0)), 2, 2, 0);
  std::ostringstream os;
  write_prefix_csv(os, s);
  CHECK(os.str() == "row,coord_1,coord_2,label\n0,1.0,1.0,0\n1,1.0,1.0,0\n");
}
