#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "esrate/analysis.hpp"
#include "esrate/error.hpp"
#include "esrate/normal.hpp"
#include "esrate/rng.hpp"

using namespace esrate;

TEST_CASE("sample_Q examples") {
  const auto sphere = hessian_family(HessianFamily::H1, 3, 0);
  const EsState s{{1.0, 2.0, -1.0}, std::log(0.3)};
  CHECK(sample_Q(sphere, s, Vector{2.0, 0.0, 0.0}) == doctest::Approx(4.0));
  CHECK(sample_Q(sphere, s, Vector{0.0, 0.0, 0.0}) == 0.0);
  const auto comp = make_composite(sphere, Transform::identity(), Vector(3, 0.0));
  CHECK_THROWS_AS(sample_Q(comp, s, Vector{1, 0, 0}), InvalidInput);
}

TEST_CASE("sample_Q pathwise bounds") {
  RandomStream rng(1);
  for (const auto& spec : {hessian_family(HessianFamily::H2, 6, 2),
                           perturbed_family(HessianFamily::H1, 6, 1, 0.5, 2.0)}) {
    const double L = spec.strong_convexity();
    const double U = spec.smoothness();
    for (int rep = 0; rep < 500; ++rep) {
      Vector m(6), z(6);
      rng.fill_normal(m);
      rng.fill_normal(z);
      const EsState s{m, std::log(0.01 + rng.uniform())};
      const double q = sample_Q(spec, s, z);
      const double z2 = dot(z, z);
      CHECK(q >= L * z2 * (1 - 1e-9) - 1e-9);
      CHECK(q <= U * z2 * (1 + 1e-9) + 1e-9);
    }
  }
}

TEST_CASE("quadratic Q does not depend on the state") {
  const auto spec = hessian_family(HessianFamily::H3, 5, 2);
  RandomStream rng(2);
  Vector z(5);
  rng.fill_normal(z);
  const double ref = dot(z, Vector{z[0], z[1], z[2], z[3], 100 * z[4]});
  for (int rep = 0; rep < 100; ++rep) {
    Vector m(5);
    rng.fill_normal(m);
    const EsState s{m, std::log(1e-3 + 10 * rng.uniform())};
    CHECK(sample_Q(spec, s, z) == doctest::Approx(ref).epsilon(1e-9));
  }
  // the cancellation guard falls back to the closed form
  const EsState tiny{Vector(5, 1.0), std::log(1e-12)};
  CHECK(sample_Q(spec, tiny, z) == doctest::Approx(ref).epsilon(1e-12));
  const auto pert = perturbed_family(HessianFamily::H1, 5, 0, 0.5, 1.0);
  CHECK_THROWS_AS(sample_Q(pert, tiny, z), Unsupported);
}

TEST_CASE("quadratic_q_exact") {
  auto [m1, v1] = quadratic_q_exact(hessian_family(HessianFamily::H1, 3, 1));
  CHECK(m1 == 21.0);
  CHECK(v1 == 402.0);
  auto [m2, v2] = quadratic_q_exact(hessian_family(HessianFamily::H1, 7, 0));
  CHECK(m2 == 7.0);
  CHECK(v2 == 14.0);
  auto [m3, v3] = quadratic_q_exact(ObjectiveSpec::diagonal({3.0}));
  CHECK(m3 == 3.0);
  CHECK(v3 == 18.0);
  CHECK_THROWS_AS(quadratic_q_exact(perturbed_family(HessianFamily::H1, 3, 0, 0.5, 1.0)),
                  Unsupported);
}

TEST_CASE("estimated Q moments converge to the closed form") {
  for (const auto& spec : {hessian_family(HessianFamily::H1, 10, 0),
                           hessian_family(HessianFamily::H1, 3, 1)}) {
    Vector m(spec.dim(), 1.0);
    const auto st = estimate_q_stats(spec, EsState{m, 0.0}, 1000000, 5);
    const auto [mean, var] = quadratic_q_exact(spec);
    CHECK(std::abs(st.mean_q - mean) <= 3 * st.se_mean);
    CHECK(std::abs(st.var_q - var) <= 3 * st.se_var);
    CHECK(std::abs(st.kappa - 2.0) <= 3 * st.se_kappa + 1e-3);
    CHECK(std::abs(st.v_std - var / (mean * mean)) <= 3 * st.se_v_std);
  }
  CHECK_THROWS_AS(estimate_q_stats(hessian_family(HessianFamily::H1, 2, 0), EsState{{1, 1}, 0}, 10, 1),
                  InvalidInput);
}

TEST_CASE("success probability examples") {
  const auto sphere = hessian_family(HessianFamily::H1, 10, 0);
  Vector m(10, 0.0);
  m[0] = 1.0;
  const auto small = estimate_success_prob(sphere, EsState{m, std::log(1e-8)}, 100000, 1);
  CHECK(std::abs(small.value - 0.5) <= 3 * small.std_error);
  const auto large = estimate_success_prob(sphere, EsState{m, std::log(1e3)}, 100000, 1);
  CHECK(large.value < 1e-3);

  const auto s100 = hessian_family(HessianFamily::H1, 100, 0);
  Vector m100(100, 0.1);
  const auto st = state_with_normalized_step(s100, m100, 2 * std_normal_quantile(0.75), 100.0);
  CHECK(normalized_step(s100, st, 100.0) == doctest::Approx(2 * std_normal_quantile(0.75)));
  const auto quarter = estimate_success_prob(s100, st, 200000, 2);
  // sandwich slack from v_std = 2/d on top of Monte Carlo error
  CHECK(std::abs(quarter.value - 0.25) <= 3 * quarter.std_error + 0.01);
}

TEST_CASE("success probability falls with sigma") {
  const auto sphere = hessian_family(HessianFamily::H1, 10, 0);
  const Vector m(10, 0.5);
  double prev = 1.0;
  double prev_se = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double sb = 0.05 * std::pow(2.0, k);
    const auto p = estimate_success_prob(sphere, state_with_normalized_step(sphere, m, sb, 10.0),
                                         50000, 3);
    CHECK(p.value <= prev + 3 * std::hypot(p.std_error, prev_se));
    prev = p.value;
    prev_se = p.std_error;
  }
}

TEST_CASE("log progress vanishes with the step") {
  const auto sphere = hessian_family(HessianFamily::H1, 10, 0);
  const Vector m(10, 1.0);
  const auto e = estimate_log_progress(sphere, EsState{m, std::log(1e-9)}, 20000, 4);
  CHECK(e.value <= 0.0);
  CHECK(e.value > -1e-8);
  const auto mid = estimate_log_progress(sphere, state_with_normalized_step(sphere, m, 1.0, 10.0),
                                         20000, 4);
  CHECK(mid.value < -0.01);
}

TEST_CASE("judge") {
  CHECK(judge(1.0, 1.0, 0.0, 5000) == Verdict::Pass);
  CHECK(judge(1.2, 1.0, 0.1, 5000) == Verdict::Pass);
  CHECK(judge(1.4, 1.0, 0.1, 5000) == Verdict::Fail);
  CHECK(judge(1.4, 1.0, 0.1, 999) == Verdict::Inconclusive);
  CHECK(judge(1.0, 1.0, std::nan(""), 5000) == Verdict::Inconclusive);
}

TEST_CASE("lemma suite on the sphere") {
  const auto sphere = hessian_family(HessianFamily::H1, 10, 0);
  const Vector m(10, 0.3);
  std::vector<EsState> states;
  for (double sb : {0.1, 1.0, 10.0}) states.push_back(state_with_normalized_step(sphere, m, sb, 10.0));
  const auto rep = check_lemma_suite(sphere, states, 100000, 6);
  CHECK(rep.count(Verdict::Fail) == 0);
  CHECK(rep.count(Verdict::Pass) == rep.checks.size());
  CHECK(rep.checks.size() == 3 * 13);

  // d <= 3 has no finite moment bound
  const auto s3 = hessian_family(HessianFamily::H1, 3, 0);
  const auto rep3 = check_lemma_suite(s3, {EsState{{1, 1, 1}, 0.0}}, 20000, 6);
  CHECK(rep3.count(Verdict::Inconclusive) >= 1);
  CHECK(rep3.count(Verdict::Fail) == 0);
}

TEST_CASE("assumption 2 against the 2/d oracle") {
  const auto big = hessian_family(HessianFamily::H1, 1000, 0);
  const auto a = check_assumption2(big, sample_states(big, 2, 1), 20000, 1);
  CHECK(a.holds);
  CHECK(a.v_std_sup == doctest::Approx(0.002).epsilon(0.1));
  CHECK(a.margin > 0.0);
  const auto small = hessian_family(HessianFamily::H1, 2, 0);
  const auto b = check_assumption2(small, sample_states(small, 4, 1), 20000, 1);
  CHECK_FALSE(b.holds);
  CHECK(b.v_std_sup == doctest::Approx(1.0).epsilon(0.1));
  CHECK_FALSE(b.kappa_inconsistent);
}

TEST_CASE("v_std of quadratics is capped by 4U^2/(dL^2)") {
  for (const auto& spec : {hessian_family(HessianFamily::H1, 50, 1), hessian_family(HessianFamily::H2, 50, 2),
                           hessian_family(HessianFamily::H3, 50, 1)}) {
    const auto in = exact_theory_inputs(spec);
    const double U = spec.smoothness();
    CHECK(in.v_std_sup <= 4 * U * U / 50.0);
    CHECK(in.kappa_inf == 2.0);
  }
}

TEST_CASE("sampled theory inputs for a perturbed objective") {
  const auto spec = perturbed_family(HessianFamily::H1, 20, 0, 0.3, 1.0);
  const auto s = theory_inputs_for(spec, 5000, 1, 8);
  CHECK(s.states.size() == 8);
  CHECK(s.inputs.L == doctest::Approx(0.7));
  CHECK(s.e_q_cap == doctest::Approx(20 * 1.3));
  CHECK(s.inputs.e_q >= 20 * 0.7 * 0.95);
  CHECK(s.inputs.e_q <= s.e_q_cap * 1.05);
  CHECK(s.inputs.kappa_inf > 1.0);
}
