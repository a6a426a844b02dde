#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "esrate/error.hpp"
#include "esrate/objectives.hpp"
#include "esrate/rng.hpp"

using namespace esrate;

TEST_CASE("eval and grad examples") {
  const auto a = ObjectiveSpec::diagonal({1, 1});
  CHECK(a.eval(Vector{0, 0}) == 0.0);
  const auto b = ObjectiveSpec::diagonal({1, 10});
  CHECK(b.eval(Vector{2, 1}) == 7.0);
  CHECK(b.grad(Vector{2, 1}) == Vector{2, 10});
  CHECK_THROWS_AS(b.eval(Vector{1, 2, 3}), InvalidInput);

  const auto sphere = hessian_family(HessianFamily::H1, 2, 0);
  const auto c = make_composite(sphere, Transform::exp_minus_one(), {1, 0});
  CHECK(c.eval(Vector{1, 0}) == 0.0);
  CHECK_THROWS_AS(c.grad(Vector{1, 0}), Unsupported);
  const auto d = make_composite(sphere, Transform::affine(2, 3), {0, 0});
  CHECK(d.eval(Vector{1, 0}) == 4.0);
}

TEST_CASE("gradient vanishes at the origin") {
  for (const auto& spec : {hessian_family(HessianFamily::H2, 5, 2),
                           perturbed_family(HessianFamily::H1, 4, 1, 0.5, 2.0)}) {
    for (double g : spec.grad(Vector(spec.dim(), 0.0))) CHECK(g == 0.0);
  }
}

TEST_CASE("hessian families") {
  const auto h1 = hessian_family(HessianFamily::H1, 3, 1);
  CHECK(*h1.hessian_diagonal() == Vector{1, 10, 10});
  CHECK(*h1.trace_hessian() == 21.0);
  CHECK(*h1.trace_hessian_squared() == 201.0);
  CHECK(h1.strong_convexity() == 1.0);
  CHECK(h1.smoothness() == 10.0);

  const auto h2 = hessian_family(HessianFamily::H2, 3, 2);
  const auto& diag = *h2.hessian_diagonal();
  CHECK(diag[0] == doctest::Approx(1.0));
  CHECK(diag[1] == doctest::Approx(10.0));
  CHECK(diag[2] == doctest::Approx(100.0));

  const auto h3 = hessian_family(HessianFamily::H3, 4, 2);
  CHECK(*h3.hessian_diagonal() == Vector{1, 1, 1, 100});

  for (auto f : {HessianFamily::H1, HessianFamily::H2, HessianFamily::H3}) {
    CHECK(*hessian_family(f, 5, 0).hessian_diagonal() == Vector(5, 1.0));
  }
  // trace closed form 1 + (d-1) 10^k
  for (std::size_t d : {2, 10, 100}) {
    for (int k : {0, 1, 3}) {
      CHECK(*hessian_family(HessianFamily::H1, d, k).trace_hessian() ==
            doctest::Approx(1.0 + (d - 1.0) * std::pow(10.0, k)));
    }
  }
}

TEST_CASE("perturbed gradient against finite differences") {
  const auto spec = perturbed_family(HessianFamily::H2, 6, 1, 0.5, 2.0);
  CHECK(spec.strong_convexity() == doctest::Approx(0.5));
  CHECK(spec.smoothness() == doctest::Approx(10.5));
  RandomStream rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    Vector x(6);
    rng.fill_normal(x);
    const Vector g = spec.grad(x);
    for (std::size_t i = 0; i < 6; ++i) {
      const double h = 1e-6;
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (spec.eval(xp) - spec.eval(xm)) / (2 * h);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("strong convexity and smoothness sandwich") {
  RandomStream rng(2);
  for (const auto& spec : {hessian_family(HessianFamily::H3, 5, 2),
                           perturbed_family(HessianFamily::H1, 5, 1, 0.8, 3.0),
                           perturbed_family(HessianFamily::H2, 5, 2, 0.5, 1.0)}) {
    const double L = spec.strong_convexity();
    const double U = spec.smoothness();
    for (int rep = 0; rep < 200; ++rep) {
      Vector x(5), y(5);
      rng.fill_normal(x);
      rng.fill_normal(y);
      Vector diff(5);
      for (std::size_t i = 0; i < 5; ++i) diff[i] = y[i] - x[i];
      const double gap = spec.eval(y) - spec.eval(x) - dot(spec.grad(x), diff);
      const double n2 = dot(diff, diff);
      CHECK(gap >= 0.5 * L * n2 - 1e-9);
      CHECK(gap <= 0.5 * U * n2 + 1e-9);
    }
  }
}

TEST_CASE("composite minimum sits at x_opt") {
  const auto base = hessian_family(HessianFamily::H1, 2, 1);
  const auto spec = make_composite(base, Transform::cube_shift(), {0.3, -0.7});
  double best = std::numeric_limits<double>::infinity();
  Vector arg;
  for (int i = -100; i <= 100; ++i) {
    for (int j = -100; j <= 100; ++j) {
      const Vector x{i / 100.0, j / 100.0};
      const double v = spec.eval(x);
      if (v < best) {
        best = v;
        arg = x;
      }
    }
  }
  CHECK(arg[0] == doctest::Approx(0.3));
  CHECK(arg[1] == doctest::Approx(-0.7));
  CHECK(spec.optimum() == Vector{0.3, -0.7});
  CHECK(spec.canonical_eval(Vector{1.3, -0.7}) == 0.5);
  CHECK_THROWS_AS(make_composite(spec, Transform::identity(), {0, 0}), InvalidInput);
  CHECK_THROWS_AS(make_composite(base, Transform::identity(), {0}), InvalidInput);
}

TEST_CASE("identity composite equals base") {
  const auto base = hessian_family(HessianFamily::H2, 4, 2);
  const auto spec = make_composite(base, Transform::identity(), Vector(4, 0.0));
  RandomStream rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    Vector x(4);
    rng.fill_normal(x);
    CHECK(spec.eval(x) == base.eval(x));
  }
  CHECK(spec.is_quadratic());
  CHECK(*spec.trace_hessian() == *base.trace_hessian());
}

TEST_CASE("transforms are strictly increasing") {
  const std::vector<Transform> ts{Transform::identity(), Transform::affine(2, 3),
                                  Transform::cube_shift(), Transform::exp_minus_one()};
  for (const auto& t : ts) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double y = 0.0; y < 50.0; y += 0.01) {
      const double v = t.apply(y);
      CHECK(v > prev);
      prev = v;
    }
    CHECK(Transform::parse(t.name()) == t);
  }
  CHECK_THROWS_AS(Transform::affine(0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(Transform::parse("log"), InvalidInput);
  CHECK(Transform::exp_minus_one().apply(1e-20) == 1e-20);
}

TEST_CASE("json round trip") {
  const auto base = perturbed_family(HessianFamily::H3, 3, 1, 0.25, 2.0);
  for (const auto& spec : {base, hessian_family(HessianFamily::H2, 3, 2),
                           make_composite(hessian_family(HessianFamily::H1, 3, 1),
                                          Transform::affine(2, 3), {1, 2, 3})}) {
    const auto back = objective_from_json(to_json(spec));
    CHECK(back.dim() == spec.dim());
    CHECK(back.describe() == spec.describe());
    const Vector x{0.3, -1.1, 2.0};
    CHECK(back.eval(x) == spec.eval(x));
  }
}
