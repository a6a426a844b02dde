#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "esrate/error.hpp"
#include "esrate/normal.hpp"

using namespace esrate;

namespace {

// Maclaurin series of the integral of the density, in long double.
double cdf_series(double x) {
  long double term = x;
  long double sum = x;
  const long double xx = static_cast<long double>(x) * x;
  for (int n = 1; n < 200; ++n) {
    term *= -xx / (2.0L * n);
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-22L) break;
  }
  const long double inv_sqrt_2pi = 0.398942280401432677939946059934381868L;
  return static_cast<double>(0.5L + inv_sqrt_2pi * sum);
}

double quantile_bisect(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std_normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("cdf examples") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_cdf(-std::sqrt(2.0 / M_PI)) == doctest::Approx(0.212).epsilon(2e-3));
  CHECK(std_normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-7));
}

TEST_CASE("cdf matches the series oracle") {
  for (double x = -3.0; x <= 3.0; x += 0.125) {
    CHECK(std::abs(std_normal_cdf(x) - cdf_series(x)) < 1e-14);
  }
}

TEST_CASE("cdf symmetry and density") {
  for (double x = 0.0; x < 8.0; x += 0.37) {
    CHECK(std_normal_cdf(x) + std_normal_cdf(-x) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(std_normal_pdf(0.0) == doctest::Approx(0.3989422804014327));
  // lower tail keeps relative accuracy
  CHECK(std_normal_cdf(-30.0) > 0.0);
  CHECK(std_normal_cdf(-10.0) == doctest::Approx(7.6198530241604696e-24).epsilon(1e-12));
}

TEST_CASE("quantile examples") {
  CHECK(std_normal_quantile(0.5) == 0.0);
  CHECK(std_normal_quantile(0.75) == doctest::Approx(0.674490).epsilon(1e-6));
  CHECK(std_normal_quantile(0.75) == doctest::Approx(quantile_bisect(0.75)).epsilon(1e-14));
  CHECK_THROWS_AS(std_normal_quantile(0.0), InvalidInput);
  CHECK_THROWS_AS(std_normal_quantile(1.0), InvalidInput);
  CHECK_THROWS_AS(std_normal_quantile(-0.1), InvalidInput);
  CHECK_THROWS_AS(std_normal_quantile(std::nan("")), InvalidInput);
}

TEST_CASE("quantile against bisection") {
  for (double p : {1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.6, 0.97575, 0.999}) {
    const double q = std_normal_quantile(p);
    CHECK(q == doctest::Approx(quantile_bisect(p)).epsilon(1e-13));
    if (p >= 1e-8) CHECK(std_normal_quantile(1.0 - p) == doctest::Approx(-q).epsilon(1e-7));
  }
}

TEST_CASE("round trip on (1e-8, 1 - 1e-8)") {
  double worst = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double p = 1e-8 + (1.0 - 2e-8) * i / 20000.0;
    worst = std::max(worst, std::abs(std_normal_cdf(std_normal_quantile(p)) - p));
  }
  CHECK(worst <= 1e-12);
  for (double p = 1e-8; p < 0.5; p *= 3.0) {
    CHECK(std_normal_cdf(std_normal_quantile(p)) == doctest::Approx(p).epsilon(1e-13));
  }
}
