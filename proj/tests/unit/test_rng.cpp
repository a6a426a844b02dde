#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "esrate/moments.hpp"
#include "esrate/montecarlo.hpp"
#include "esrate/rng.hpp"

using namespace esrate;

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(42, 0), b(42, 0), c(42, 1), e(43, 0);
  bool differs_c = false, differs_e = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs_c |= x != c.next_u64();
    differs_e |= x != e.next_u64();
  }
  CHECK(differs_c);
  CHECK(differs_e);
}

TEST_CASE("uniform stays in the open unit interval") {
  RandomStream r(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal moments") {
  RandomStream r(11);
  Moments<1> m;
  Moments<1> m4;
  for (int i = 0; i < 400000; ++i) {
    const double z = r.normal();
    m.add({z});
    m4.add({z * z * z * z});
  }
  CHECK(std::abs(m.mean(0)) < 4.0 * std::sqrt(1.0 / 400000));
  CHECK(m.variance(0) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(m4.mean(0) == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("fill_normal matches repeated normal()") {
  RandomStream a(5, 2), b(5, 2);
  std::vector<double> v(7);
  a.fill_normal(v);
  for (double x : v) CHECK(x == b.normal());
}

TEST_CASE("derive_seed spreads indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 50; ++i) {
    for (std::uint64_t j = 0; j < 50; ++j) seen.insert(derive_seed(1, i, j));
  }
  CHECK(seen.size() == 2500);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}

TEST_CASE("moments merge equals sequential accumulation") {
  RandomStream r(3);
  Moments<2> all, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double x = r.normal();
    const double y = x + r.normal();
    all.add({x, y});
    (i < 400 ? left : right).add({x, y});
  }
  left.merge(right);
  CHECK(left.count() == all.count());
  CHECK(left.mean(1) == doctest::Approx(all.mean(1)).epsilon(1e-12));
  CHECK(left.covariance(0, 1) == doctest::Approx(all.covariance(0, 1)).epsilon(1e-12));
  CHECK(all.covariance(0, 1) == doctest::Approx(1.0).epsilon(0.15));
  // se of x + y through the delta method equals the direct se of the sum
  Moments<1> sum;
  RandomStream r2(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = r2.normal();
    sum.add({x + x + r2.normal()});
  }
  CHECK(all.se_linear({1.0, 1.0}) == doctest::Approx(sum.se_mean(0)).epsilon(1e-9));
}

TEST_CASE("monte_carlo depends on (n, seed) only") {
  auto sample = [](const Vector& z, Vector&) { return Moments<1>::Row{z[0] * z[1]}; };
  const auto a = monte_carlo<1>(150000, 9, 2, sample);
  const auto b = monte_carlo<1>(150000, 9, 2, sample);
  CHECK(a.count() == 150000);
  CHECK(a.mean(0) == b.mean(0));
  CHECK(a.variance(0) == b.variance(0));
  CHECK(std::abs(a.mean(0)) < 4.0 * a.se_mean(0));
}
