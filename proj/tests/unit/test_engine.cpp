#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "esrate/engine.hpp"
#include "esrate/error.hpp"
#include "esrate/rng.hpp"

using namespace esrate;

TEST_CASE("p_target examples") {
  CHECK(p_target(EsParams::make(std::exp(1.0), std::exp(-0.25))) == doctest::Approx(0.2));
  CHECK(p_target(EsParams::make(2.0, 0.5)) == doctest::Approx(0.5));
  CHECK(p_target(EsParams::make(std::exp(0.3), std::exp(-0.1))) == doctest::Approx(0.25));
  for (double p : {0.05, 0.2, 0.3, 0.45}) {
    CHECK(p_target(EsParams::for_target(1.7, p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(EsParams::make(1.0, 0.5), InvalidInput);
  CHECK_THROWS_AS(EsParams::make(2.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(EsParams::for_target(2.0, 1.0), InvalidInput);
}

TEST_CASE("alpha presets keep p_target at one fifth") {
  for (auto rule : {AlphaRule::Const, AlphaRule::Sqrt, AlphaRule::Dim}) {
    const auto p = alpha_preset(rule, 1.0, 100);
    CHECK(p_target(p) == doctest::Approx(0.2));
    CHECK(parse_alpha_rule(alpha_rule_name(rule)) == rule);
  }
  CHECK(alpha_preset(AlphaRule::Const, 1.0, 100).log_up() == doctest::Approx(1.0));
  CHECK(alpha_preset(AlphaRule::Sqrt, 1.0, 100).log_up() == doctest::Approx(0.1));
  CHECK(alpha_preset(AlphaRule::Dim, 1.0, 100).log_up() == doctest::Approx(0.01));
  CHECK_THROWS_AS(parse_alpha_rule("fast"), InvalidInput);
}

TEST_CASE("step examples") {
  const auto sphere = hessian_family(HessianFamily::H1, 2, 0);
  const auto params = EsParams::make(std::exp(1.0), std::exp(-0.25));
  const EsState s{{1.0, 0.0}, std::log(0.1)};

  const auto down = step(s, Vector{-1.0, 0.0}, sphere, params);
  CHECK(down.success);
  CHECK(down.state.m[0] == doctest::Approx(0.9));
  CHECK(down.state.log_sigma == doctest::Approx(std::log(0.1) + 1.0));

  const auto up = step(s, Vector{1.0, 0.0}, sphere, params);
  CHECK_FALSE(up.success);
  CHECK(up.state.m == s.m);
  CHECK(up.state.log_sigma == doctest::Approx(std::log(0.1) - 0.25));

  const auto tie = step(s, Vector{0.0, 0.0}, sphere, params);
  CHECK(tie.success);
  CHECK(tie.state.log_sigma == doctest::Approx(std::log(0.1) + 1.0));

  CHECK_THROWS_AS(step(s, Vector{0.0}, sphere, params), InvalidInput);
}

TEST_CASE("init_at examples") {
  const auto sphere = hessian_family(HessianFamily::H1, 2, 0);
  CHECK(init_at(sphere, {3.0, 4.0}).sigma() == doctest::Approx(2.5));
  const auto h1 = hessian_family(HessianFamily::H1, 3, 1);
  CHECK(init_at(h1, {1.0, 1.0, 1.0}).sigma() == doctest::Approx(std::sqrt(201.0) / 21.0));
  const auto pert = perturbed_family(HessianFamily::H1, 3, 0, 0.5, 1.0);
  const Vector m0{1.0, 1.0, 1.0};
  CHECK(init_at(pert, m0).sigma() == doctest::Approx(norm(pert.grad(m0)) / (3.0 * 1.5)));
  CHECK_THROWS_AS(init_at(sphere, {0.0, 0.0}), InvalidInput);
}

TEST_CASE("init_default draws around the optimum") {
  const auto base = hessian_family(HessianFamily::H1, 4, 1);
  const auto comp = make_composite(base, Transform::cube_shift(), {10, 10, 10, 10});
  const auto a = init_default(base, 9);
  const auto b = init_default(comp, 9);
  for (std::size_t i = 0; i < 4; ++i) CHECK(b.m[i] == doctest::Approx(a.m[i] + 10.0));
  CHECK(a.log_sigma == doctest::Approx(b.log_sigma));
}

TEST_CASE("run is deterministic and elitist") {
  const auto spec = hessian_family(HessianFamily::H2, 8, 2);
  const auto params = alpha_preset(AlphaRule::Const, 1.0, 8);
  const auto init = init_default(spec, 3);
  const auto a = run(spec, params, init, 3000, 1e-100, 3);
  const auto b = run(spec, params, init, 3000, 1e-100, 3);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].log_dist == b.points[i].log_dist);
    CHECK(a.points[i].log_sigma == b.points[i].log_sigma);
    CHECK(a.points[i].success == b.points[i].success);
  }
  for (std::size_t i = 1; i < a.points.size(); ++i) CHECK(a.points[i].log_f <= a.points[i - 1].log_f);
  CHECK(a.points.front().t == 0);
  CHECK(a.stop_reason == StopReason::Budget);
  CHECK(a.t_final == 3000);
}

TEST_CASE("budget boundaries") {
  const auto spec = hessian_family(HessianFamily::H1, 3, 0);
  const auto params = alpha_preset(AlphaRule::Const, 1.0, 3);
  const auto init = init_default(spec, 1);
  const auto t = run(spec, params, init, 1, 1e-100, 1);
  CHECK(t.t_final == 1);
  CHECK(t.points.size() == 2);
  CHECK_THROWS_AS(run(spec, params, init, 0, 1e-100, 1), InvalidInput);
  CHECK_THROWS_AS(run(spec, params, EsState{{0, 0, 0}, 0.0}, 10, 1e-100, 1), InvalidInput);
  CHECK(default_budget(10) == 20000);
}

TEST_CASE("observer sees every state") {
  const auto spec = hessian_family(HessianFamily::H1, 3, 0);
  const auto params = alpha_preset(AlphaRule::Const, 1.0, 3);
  std::int64_t calls = 0;
  const auto t = run(spec, params, init_default(spec, 2), 50, 1e-100, 2,
                     [&](std::int64_t, const EsState&, bool) { ++calls; });
  CHECK(calls == t.t_final + 1);
}

TEST_CASE("sphere d=10 reaches the floor before the budget") {
  const auto spec = hessian_family(HessianFamily::H1, 10, 0);
  const auto params = alpha_preset(AlphaRule::Const, 1.0, 10);
  int reached = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = run(spec, params, init_default(spec, seed), 20000, 1e-100, seed);
    if (t.stop_reason == StopReason::FFloor) {
      ++reached;
      CHECK(t.points.back().log_f < std::log(1e-100));
      CHECK(t.points[t.points.size() - 2].log_f >= std::log(1e-100));
    }
  }
  CHECK(reached >= 9);
}

TEST_CASE("transform leaves the sequence unchanged") {
  const auto base = hessian_family(HessianFamily::H3, 5, 1);
  const auto comp = make_composite(base, Transform::cube_shift(), Vector(5, 0.0));
  const auto params = alpha_preset(AlphaRule::Sqrt, 1.0, 5);
  const auto init = init_default(base, 4);
  const auto a = run(base, params, init, 500, 1e-100, 4);
  const auto b = run(comp, params, init, 500, 1e-100, 4);
  CHECK(a.final_state.m == b.final_state.m);
  CHECK(a.final_state.log_sigma == b.final_state.log_sigma);
}

TEST_CASE("trajectory csv") {
  const auto spec = hessian_family(HessianFamily::H1, 3, 1);
  const auto t = run(spec, alpha_preset(AlphaRule::Const, 1.0, 3), init_default(spec, 7), 25,
                     1e-100, 7);
  std::ostringstream out;
  write_trajectory_csv(out, t, 10);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,log_dist,log_f,log_sigma,success");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 4);  // t = 0, 10, 20, 25
  CHECK(last.rfind("25,", 0) == 0);
}
