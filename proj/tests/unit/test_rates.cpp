#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "esrate/engine.hpp"
#include "esrate/error.hpp"
#include "esrate/rates.hpp"
#include "esrate/rng.hpp"

using namespace esrate;

namespace {

Trajectory synthetic(std::int64_t T, double a, double b, double noise = 0.0, std::uint64_t seed = 1) {
  Trajectory traj;
  RandomStream rng(seed);
  for (std::int64_t t = 0; t <= T; ++t) {
    const double y = a + b * static_cast<double>(t) + noise * rng.normal();
    traj.points.push_back({t, y, 2.0 * y, 0.0, true});
  }
  traj.t_final = T;
  return traj;
}

}  // namespace

TEST_CASE("exact line") {
  const auto traj = synthetic(1000, 3.0, -0.01);
  const auto e = estimate_cr(traj);
  CHECK(e.cr_hat == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(e.std_error < 1e-12);
  CHECK(e.t_start == 901);
  CHECK(e.t_end == 1000);
  const auto f = estimate_cr(traj, 0.1, RateSeries::LogFHalf);
  CHECK(f.cr_hat == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(two_point_cr(traj).cr_hat == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("fit_line covariance under affine maps of the data") {
  RandomStream rng(4);
  std::vector<double> t, y;
  for (int i = 0; i < 50; ++i) {
    t.push_back(i);
    y.push_back(1.0 - 0.2 * i + rng.normal());
  }
  const auto base = fit_line(t, y);
  std::vector<double> y2, t2;
  for (int i = 0; i < 50; ++i) {
    y2.push_back(3.0 * y[i] + 7.0);
    t2.push_back(t[i] + 100.0);
  }
  const auto scaled = fit_line(t, y2);
  CHECK(scaled.slope == doctest::Approx(3.0 * base.slope));
  CHECK(scaled.se_slope == doctest::Approx(3.0 * base.se_slope));
  const auto shifted = fit_line(t2, y);
  CHECK(shifted.slope == doctest::Approx(base.slope));
  CHECK(shifted.se_slope == doctest::Approx(base.se_slope));
  CHECK_THROWS_AS(fit_line(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Unsupported);
}

TEST_CASE("window") {
  CHECK(window_start(1000, 0.1) == 901);
  CHECK(window_start(50, 0.1) == 41);  // widened to 10 points
  CHECK(window_start(9, 0.1) == 0);
  CHECK_THROWS_AS(window_start(8, 0.1), Unsupported);
  CHECK_THROWS_AS(window_start(100, 1.0), InvalidInput);
  CHECK_THROWS_AS(estimate_cr(synthetic(5, 0.0, -1.0)), Unsupported);
}

TEST_CASE("mean and pooled aggregation agree on parallel lines") {
  std::vector<Trajectory> trajs;
  std::vector<RateEstimate> ests;
  for (int k = 0; k < 5; ++k) {
    trajs.push_back(synthetic(2000, k * 1.5, -0.003, 0.05, 10 + k));
    ests.push_back(estimate_cr(trajs.back()));
  }
  const auto mean = aggregate_mean(ests);
  const auto pooled = aggregate_pooled(trajs);
  CHECK(mean.trials_aggregated == 5);
  CHECK(pooled.trials_aggregated == 5);
  CHECK(std::abs(mean.cr_hat - 0.003) <= 3 * mean.std_error);
  CHECK(std::abs(pooled.cr_hat - 0.003) <= 3 * pooled.std_error);
  CHECK(std::abs(mean.cr_hat - pooled.cr_hat) <= 3 * (mean.std_error + pooled.std_error));
  CHECK_THROWS_AS(aggregate_mean(std::vector<RateEstimate>{}), InvalidInput);
}

TEST_CASE("rate bounds and scaling") {
  CHECK(lower_rate_bound(10) == doctest::Approx(0.1));
  CHECK(lower_rate_bound(100) == doctest::Approx(0.01));
  RateEstimate e;
  e.cr_hat = 0.01;
  CHECK(scaled_rate(e, hessian_family(HessianFamily::H1, 10, 0)) == doctest::Approx(0.1));
  CHECK(scaled_rate(e, hessian_family(HessianFamily::H1, 3, 1)) == doctest::Approx(0.21));
  const auto pert = perturbed_family(HessianFamily::H1, 10, 0, 0.5, 1.0);
  CHECK_THROWS_AS(scaled_rate(e, pert), Unsupported);
  CHECK(scaled_rate_class(e, pert) == doctest::Approx(0.01 * 10 * 1.5 / 0.5));
}

TEST_CASE("sphere runs converge near 0.1/d and log f halves match") {
  const std::size_t d = 10;
  const auto spec = hessian_family(HessianFamily::H1, d, 0);
  const auto params = alpha_preset(AlphaRule::Const, 1.0, d);
  std::vector<RateEstimate> ests;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto traj = run(spec, params, init_default(spec, seed), 1500, 1e-100, seed);
    const auto e = estimate_cr(traj);
    CHECK(e.cr_hat <= lower_rate_bound(d) + 2 * e.std_error);
    const auto f = estimate_cr(traj, 0.1, RateSeries::LogFHalf);
    CHECK(f.cr_hat == doctest::Approx(e.cr_hat).epsilon(0.5));
    ests.push_back(e);
  }
  const auto agg = aggregate_mean(ests);
  CHECK(agg.cr_hat > 0.05 / d);
  CHECK(agg.cr_hat < 0.3 / d);
}
