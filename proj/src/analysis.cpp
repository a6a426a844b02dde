#include "esrate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "esrate/error.hpp"
#include "esrate/montecarlo.hpp"
#include "esrate/normal.hpp"

namespace esrate {

namespace {

constexpr double kCancellation = 1e-6;

// Per-state quantities shared by every sample.
struct QContext {
  const ObjectiveSpec* spec;
  const Vector* m;
  double sigma;
  double f_m;
  Vector grad;
  double grad_norm;
  double m_norm;
  const Vector* h;  // Hessian diagonal for quadratics

  QContext(const ObjectiveSpec& s, const EsState& state)
      : spec(&s), m(&state.m), sigma(state.sigma()), f_m(0.0), grad_norm(0.0), m_norm(0.0),
        h(s.hessian_diagonal()) {
    if (s.is_composite()) throw InvalidInput("Q statistics need a non-composite objective");
    if (state.m.size() != s.dim()) throw InvalidInput("state has the wrong dimension");
    f_m = s.eval(state.m);
    grad = s.grad(state.m);
    grad_norm = norm(grad);
    m_norm = norm(state.m);
    if (!(m_norm > 0.0)) throw InvalidInput("state sits at the optimum");
  }

  double q(std::span<const double> z, Vector& x) const {
    double z2 = 0.0;
    double lin = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      x[i] = (*m)[i] + sigma * z[i];
      z2 += z[i] * z[i];
      lin += grad[i] * z[i];
    }
    if (sigma * std::sqrt(z2) < kCancellation * m_norm) {
      if (!h) throw Unsupported("sample_Q: step too small to resolve the Taylor remainder");
      double s = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) s += (*h)[i] * z[i] * z[i];
      return s;
    }
    const double f_x = spec->eval(x);
    return 2.0 / (sigma * sigma) * (f_x - f_m - sigma * lin);
  }

  // z_e <= 0
  bool descent_side(std::span<const double> z) const { return dot(grad, z) <= 0.0; }
};

void require_samples(std::int64_t n) {
  if (n < kMinSamples) throw InvalidInput("Monte Carlo estimates need n >= 1000");
}

}  // namespace

double sample_Q(const ObjectiveSpec& spec, const EsState& state, std::span<const double> z) {
  if (z.size() != spec.dim()) throw InvalidInput("z has the wrong dimension");
  const QContext ctx(spec, state);
  Vector x(spec.dim());
  return ctx.q(z, x);
}

QStats estimate_q_stats(const ObjectiveSpec& spec, const EsState& state, std::int64_t n,
                        std::uint64_t seed) {
  require_samples(n);
  const QContext ctx(spec, state);
  const auto mom = monte_carlo<3>(n, seed, spec.dim(), [&](std::span<const double> z, Vector& x) {
    const double q = ctx.q(z, x);
    return std::array<double, 3>{q, q * q, ctx.descent_side(z) ? q : 0.0};
  });
  QStats s;
  s.n = mom.count();
  s.mean_q = mom.mean(0);
  s.var_q = mom.variance(0);
  s.half_mean_q = mom.mean(2);
  s.v_std = s.var_q / (s.mean_q * s.mean_q);
  s.kappa = s.mean_q / s.half_mean_q;
  const double mq = s.mean_q;
  const double mq2 = mom.mean(1);
  s.se_mean = mom.se_mean(0);
  s.se_half = mom.se_mean(2);
  s.se_var = mom.se_linear({-2.0 * mq, 1.0, 0.0});
  s.se_v_std = mom.se_linear({-2.0 * mq2 / (mq * mq * mq), 1.0 / (mq * mq), 0.0});
  s.se_kappa = mom.se_linear({1.0 / s.half_mean_q, 0.0, -mq / (s.half_mean_q * s.half_mean_q)});
  return s;
}

std::pair<double, double> quadratic_q_exact(const ObjectiveSpec& spec) {
  const auto tr = spec.canonical().trace_hessian();
  const auto tr2 = spec.canonical().trace_hessian_squared();
  if (!tr || !tr2) throw Unsupported("exact Q moments exist for quadratic objectives only");
  return {*tr, 2.0 * *tr2};
}

double normalized_step(const ObjectiveSpec& spec, const EsState& state, double mean_q) {
  return state.sigma() * mean_q / norm(spec.grad(state.m));
}

EsState state_with_normalized_step(const ObjectiveSpec& spec, Vector m, double sigma_bar,
                                   double mean_q) {
  if (!(sigma_bar > 0.0) || !(mean_q > 0.0)) {
    throw InvalidInput("normalized step and E[Q] must be positive");
  }
  const double g = norm(spec.grad(m));
  if (!(g > 0.0)) throw InvalidInput("state sits at the optimum");
  return EsState{std::move(m), std::log(sigma_bar * g / mean_q)};
}

EstimateWithError estimate_success_prob(const ObjectiveSpec& spec, const EsState& state,
                                        std::int64_t n, std::uint64_t seed) {
  require_samples(n);
  const double f_m = spec.eval(state.m);
  const double sigma = state.sigma();
  const auto mom = monte_carlo<1>(n, seed, spec.dim(), [&](std::span<const double> z, Vector& x) {
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = state.m[i] + sigma * z[i];
    return std::array<double, 1>{spec.eval(x) <= f_m ? 1.0 : 0.0};
  });
  const double p = mom.mean(0);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(mom.count())), mom.count()};
}

EstimateWithError estimate_log_progress(const ObjectiveSpec& spec, const EsState& state,
                                        std::int64_t n, std::uint64_t seed) {
  require_samples(n);
  const double f_m = spec.eval(state.m);
  const double canon_m = spec.canonical_eval(state.m);
  if (!(canon_m > 0.0)) throw InvalidInput("state sits at the optimum");
  const double sigma = state.sigma();
  const auto mom = monte_carlo<1>(n, seed, spec.dim(), [&](std::span<const double> z, Vector& x) {
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = state.m[i] + sigma * z[i];
    if (!(spec.eval(x) <= f_m)) return std::array<double, 1>{0.0};
    return std::array<double, 1>{std::log(spec.canonical_eval(x) / canon_m)};
  });
  return {mom.mean(0), mom.se_mean(0), mom.count()};
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

Verdict judge(double lhs, double rhs, double se, std::int64_t n) {
  if (n < kMinSamples || !std::isfinite(se) || !std::isfinite(lhs) || !std::isfinite(rhs)) {
    return Verdict::Inconclusive;
  }
  return lhs <= rhs + 3.0 * se ? Verdict::Pass : Verdict::Fail;
}

bool CheckReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.verdict == Verdict::Pass; });
}

std::size_t CheckReport::count(Verdict v) const {
  return static_cast<std::size_t>(std::count_if(
      checks.begin(), checks.end(), [v](const CheckResult& c) { return c.verdict == v; }));
}

nlohmann::json to_json(const CheckReport& report) {
  auto arr = nlohmann::json::array();
  for (const auto& c : report.checks) {
    arr.push_back({{"name", c.name},
                   {"state_id", c.state_id},
                   {"lhs", c.lhs},
                   {"rhs", c.rhs},
                   {"stderr", c.std_error},
                   {"verdict", verdict_name(c.verdict)}});
  }
  return nlohmann::json{{"checks", arr},
                        {"pass", report.count(Verdict::Pass)},
                        {"fail", report.count(Verdict::Fail)},
                        {"inconclusive", report.count(Verdict::Inconclusive)}};
}

CheckReport check_lemma_suite(const ObjectiveSpec& spec, const std::vector<EsState>& states,
                              std::int64_t n, std::uint64_t seed) {
  using Row = std::array<double, 7>;
  enum { kQ, kQ2, kHalf, kSucc, kRel, kLog, kExp };
  const double d = static_cast<double>(spec.dim());
  const double L = spec.strong_convexity();
  const double U = spec.smoothness();
  const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;

  CheckReport report;
  for (std::size_t id = 0; id < states.size(); ++id) {
    const EsState& state = states[id];
    const QContext ctx(spec, state);
    const double f_m = ctx.f_m;
    const double sigma = ctx.sigma;
    const std::uint64_t state_seed = derive_seed(seed, id);
    const auto mom = n < kMinSamples ? Moments<7>{} :
        monte_carlo<7>(n, state_seed, spec.dim(), [&](std::span<const double> z, Vector& x) {
          const double q = ctx.q(z, x);
          const double f_x = spec.eval(x);
          const bool succ = f_x <= f_m;
          const double lp = succ ? std::log(f_x / f_m) : 0.0;
          return Row{q,
                     q * q,
                     ctx.descent_side(z) ? q : 0.0,
                     succ ? 1.0 : 0.0,
                     succ ? (f_x - f_m) / f_m : 0.0,
                     lp,
                     std::exp(std::abs(lp))};
        });
    const std::int64_t count = mom.count();
    auto add = [&](std::string name, double lhs, double rhs, const Row& g) {
      const double se = mom.se_linear(g);
      report.checks.push_back({std::move(name), id, lhs, rhs, se, judge(lhs, rhs, se, count)});
    };

    const double mq = mom.mean(kQ);
    const double mq2 = mom.mean(kQ2);
    const double mh = mom.mean(kHalf);
    const double ms = mom.mean(kSucc);

    add("lemma1_mean_lower", d * L, mq, Row{-1.0});
    add("lemma1_mean_upper", mq, d * U, Row{1.0});
    add("lemma1_variance", mom.variance(kQ), 4.0 * d * U * U, Row{-2.0 * mq, 1.0});
    {
      const double dev = mh - 0.5 * mq;
      const double sgn = dev >= 0.0 ? 1.0 : -1.0;
      const double c = std::sqrt(2.0 / d) * (U / L);
      add("lemma1_half_split", std::abs(dev), c * mq, Row{-0.5 * sgn - c, 0.0, sgn});
    }
    {
      const double a = sigma * ctx.grad_norm / f_m;
      const double b = sigma / (2.0 * ctx.grad_norm);
      const double rhs = a * (b * mh - inv_sqrt_2pi) * ms;
      Row g{};
      g[kHalf] = -a * b * ms;
      g[kSucc] = -a * (b * mh - inv_sqrt_2pi);
      Row g_rel = g;
      g_rel[kRel] = 1.0;
      add("lemma2_relative_progress", mom.mean(kRel), rhs, g_rel);
      Row g_log = g;
      g_log[kLog] = 1.0;
      add("lemma2_log_progress", mom.mean(kLog), rhs, g_log);
    }
    if (spec.dim() > 3) {
      Row g{};
      g[kExp] = 1.0;
      add("lemma3_exp_moment", mom.mean(kExp), (U / L) * (1.0 + 1.0 / (d - 3.0)), g);
    } else {
      report.checks.push_back({"lemma3_exp_moment", id, mom.mean(kExp),
                               std::numeric_limits<double>::infinity(), 0.0,
                               Verdict::Inconclusive});
    }
    {
      const double scale = sigma / ctx.grad_norm;  // sigma_bar = scale * E[Q]
      const double sigma_bar = scale * mq;
      const double v = mq2 / (mq * mq) - 1.0;
      const double dv_dq = -2.0 * mq2 / (mq * mq * mq);
      const double dv_dq2 = 1.0 / (mq * mq);
      for (double eps : {0.1, 0.3, 0.5}) {
        const std::string tag = "_eps" + std::to_string(eps).substr(0, 3);
        const double e2 = eps * eps;
        {
          const double arg = -0.5 * sigma_bar * (1.0 + eps);
          const double lhs = std_normal_cdf(arg) - v / e2;
          Row g{};
          g[kQ] = -std_normal_pdf(arg) * 0.5 * scale * (1.0 + eps) - dv_dq / e2;
          g[kQ2] = -dv_dq2 / e2;
          g[kSucc] = -1.0;
          add("lemma4_lower" + tag, lhs, ms, g);
        }
        {
          const double arg = -0.5 * sigma_bar * (1.0 - eps);
          const double rhs = std_normal_cdf(arg) + v / e2;
          Row g{};
          g[kQ] = std_normal_pdf(arg) * 0.5 * scale * (1.0 - eps) - dv_dq / e2;
          g[kQ2] = -dv_dq2 / e2;
          g[kSucc] = 1.0;
          add("lemma4_upper" + tag, ms, rhs, g);
        }
      }
    }
  }
  return report;
}

Assumption2Report check_assumption2(const ObjectiveSpec& spec, const std::vector<EsState>& states,
                                    std::int64_t n, std::uint64_t seed) {
  if (states.empty()) throw InvalidInput("assumption check needs at least one state");
  Assumption2Report r;
  r.v_std_sup = -std::numeric_limits<double>::infinity();
  r.kappa_inf = std::numeric_limits<double>::infinity();
  double kappa_se = 0.0;
  for (std::size_t id = 0; id < states.size(); ++id) {
    QStats s = estimate_q_stats(spec, states[id], n, derive_seed(seed, id));
    r.v_std_sup = std::max(r.v_std_sup, s.v_std);
    if (s.kappa < r.kappa_inf) {
      r.kappa_inf = s.kappa;
      kappa_se = s.se_kappa;
    }
    r.per_state.push_back(s);
  }
  r.kappa_inconsistent = r.kappa_inf + 3.0 * kappa_se < 1.0;
  r.rhs = assumption2_rhs(r.kappa_inf);
  r.margin = r.rhs - r.v_std_sup;
  r.holds = r.margin > 0.0;
  return r;
}

nlohmann::json to_json(const Assumption2Report& r) {
  auto states = nlohmann::json::array();
  for (std::size_t i = 0; i < r.per_state.size(); ++i) {
    const auto& s = r.per_state[i];
    states.push_back({{"state_id", i},
                      {"mean_q", s.mean_q},
                      {"v_std", s.v_std},
                      {"v_std_stderr", s.se_v_std},
                      {"kappa", s.kappa},
                      {"kappa_stderr", s.se_kappa}});
  }
  return nlohmann::json{{"holds", r.holds},
                        {"margin", r.margin},
                        {"v_std_sup", r.v_std_sup},
                        {"kappa_inf", r.kappa_inf},
                        {"rhs", r.rhs},
                        {"kappa_inconsistent", r.kappa_inconsistent},
                        {"states", states}};
}

std::vector<EsState> sample_states(const ObjectiveSpec& spec, std::size_t count,
                                   std::uint64_t seed) {
  if (count == 0) throw InvalidInput("state count must be positive");
  if (spec.is_composite()) throw InvalidInput("sample states on the canonical objective");
  const std::size_t d = spec.dim();
  const double cap = static_cast<double>(d) * spec.smoothness();
  std::vector<EsState> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(count - 1);
    const double radius = std::pow(10.0, -3.0 + 6.0 * frac) * std::sqrt(static_cast<double>(d));
    // a stride coprime to most counts decorrelates step size from radius
    const double step_frac =
        count == 1 ? 0.5 : static_cast<double>((i * 7) % count) / static_cast<double>(count - 1);
    const double sigma_bar = std::pow(10.0, -1.0 + 2.0 * std::min(step_frac, 1.0));
    RandomStream rng(seed, i);
    Vector m(d);
    double len = 0.0;
    while (!(len > 0.0)) {
      rng.fill_normal(m);
      len = norm(m);
    }
    for (double& v : m) v *= radius / len;
    out.push_back(state_with_normalized_step(spec, std::move(m), sigma_bar, cap));
  }
  return out;
}

SampledInputs theory_inputs_for(const ObjectiveSpec& spec, std::int64_t n, std::uint64_t seed,
                                std::size_t state_count) {
  const ObjectiveSpec& base = spec.canonical();
  const double cap = static_cast<double>(base.dim()) * base.smoothness();
  if (base.is_quadratic()) return {exact_theory_inputs(base), cap, {}};
  SampledInputs out{{base.strong_convexity(), 0.0, 0.0, 0.0, base.dim()}, cap,
                    sample_states(base, state_count, seed)};
  const Assumption2Report r = check_assumption2(base, out.states, n, derive_seed(seed, 1u << 20));
  double e_q = 0.0;
  for (const auto& s : r.per_state) e_q = std::max(e_q, s.mean_q);
  out.inputs.e_q = e_q;
  out.inputs.v_std_sup = r.v_std_sup;
  out.inputs.kappa_inf = r.kappa_inf;
  return out;
}

std::string_view regime_name(DriftRegime r) {
  switch (r) {
    case DriftRegime::SmallSigma:
      return "small_sigma";
    case DriftRegime::LargeSigma:
      return "large_sigma";
    case DriftRegime::Reasonable:
      return "reasonable";
  }
  return "reasonable";
}

DriftRegime classify_regime(const ObjectiveSpec& spec, const EsState& state,
                            const TheoryConstants& c, double mean_q) {
  const double f = spec.canonical_eval(state.m);
  const double small = std::log(c.s) + 0.5 * std::log(c.L * f) - std::log(c.alpha_up) -
                       std::log(c.e_q);
  if (state.log_sigma < small) return DriftRegime::SmallSigma;
  Vector shifted = state.m;
  const Vector x_opt = spec.optimum();
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= x_opt[i];
  const double g = norm(spec.canonical().grad(shifted));
  const double large = std::log(c.ell) + std::log(g) - 0.5 * std::log(2.0) -
                       std::log(c.alpha_down) - std::log(mean_q);
  if (state.log_sigma > large) return DriftRegime::LargeSigma;
  return DriftRegime::Reasonable;
}

DriftEstimate estimate_drift(const ObjectiveSpec& spec, const EsState& state,
                             const EsParams& params, const TheoryConstants& c, std::int64_t n,
                             std::uint64_t seed, std::optional<double> mean_q) {
  require_samples(n);
  if (std::abs(params.alpha_up - c.alpha_up) > 1e-12 * c.alpha_up ||
      std::abs(params.alpha_down - c.alpha_down) > 1e-12 * c.alpha_down) {
    throw InvalidInput("drift: step-size factors differ from those the constants were built for");
  }
  double mq = 0.0;
  if (mean_q) {
    mq = *mean_q;
  } else if (const auto tr = spec.canonical().trace_hessian()) {
    mq = *tr;
  } else {
    mq = estimate_q_stats(spec.canonical(), state, std::max<std::int64_t>(n, 100000),
                          derive_seed(seed, 2)).mean_q;
  }
  const DriftRegime regime = classify_regime(spec, state, c, mq);

  const double f_m = spec.eval(state.m);
  const double log_f = std::log(spec.canonical_eval(state.m));
  const double v0 = potential_from_logs(log_f, state.log_sigma, c);
  const double sigma = state.sigma();
  const double up = params.log_up();
  const double down = params.log_down();
  const auto mom = monte_carlo<1>(n, seed, spec.dim(), [&](std::span<const double> z, Vector& x) {
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = state.m[i] + sigma * z[i];
    if (spec.eval(x) <= f_m) {
      const double lf = std::log(spec.canonical_eval(x));
      return std::array<double, 1>{potential_from_logs(lf, state.log_sigma + up, c) - v0};
    }
    return std::array<double, 1>{potential_from_logs(log_f, state.log_sigma + down, c) - v0};
  });

  const double scale = std::min(c.w / 4.0, c.log_ratio());
  double bound = -c.w / 4.0;
  if (regime == DriftRegime::SmallSigma) bound = scale * (c.p_target - c.q_high);
  if (regime == DriftRegime::LargeSigma) bound = scale * (c.q_low - c.p_target);
  return {{mom.mean(0), mom.se_mean(0), mom.count()}, regime, bound};
}

}  // namespace esrate
