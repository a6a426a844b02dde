#include "esrate/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>

#include "esrate/error.hpp"
#include "esrate/format.hpp"
#include "esrate/normal.hpp"

namespace esrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2OverPi = std::numbers::sqrt2 * std::numbers::inv_sqrtpi;
constexpr double kEpsTol = 1e-9;
constexpr double kInset = 1e-12;
constexpr double kLowCap = 1e6;

// Minimiser of a unimodal f on [a, b].
std::pair<double, double> golden_min(const std::function<double(double)>& f, double a, double b) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > kEpsTol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

// Largest x in (lo, hi) with pred(x) true, for pred true at lo and false at hi.
double bisect(const std::function<bool(double)>& pred, double lo, double hi) {
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void check_q_v(double q, double v) {
  if (!(q > 0.0 && q < 0.5)) throw InvalidInput("q must lie in (0, 1/2)");
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("v_std must be finite and >= 0");
}

double b_high_term(double q, double v, double eps) {
  const double a = q + v / (eps * eps);
  if (!(a < 1.0)) return -kInf;
  return -2.0 * std_normal_quantile(a) / (1.0 + eps);
}

double b_low_term(double q, double v, double eps) {
  const double a = q - v / (eps * eps);
  if (!(a > 0.0)) return kInf;
  return -2.0 * std_normal_quantile(a) / (1.0 - eps);
}

// b_low without the divergence cap, +inf outside the domain.
double b_low_raw(double q, double v) {
  if (!(v < q)) return kInf;
  if (v == 0.0) return -2.0 * std_normal_quantile(q);
  const double lo = 0.5 * std::log(v / q) + kInset;
  const double hi = -kInset;
  if (!(lo < hi)) return kInf;
  return golden_min([&](double t) { return b_low_term(q, v, std::exp(t)); }, lo, hi).second;
}

}  // namespace

TheoryInputs exact_theory_inputs(const ObjectiveSpec& spec) {
  const ObjectiveSpec& base = spec.canonical();
  const auto tr = base.trace_hessian();
  const auto tr2 = base.trace_hessian_squared();
  if (!tr || !tr2) throw Unsupported("exact theory inputs need a quadratic objective");
  return TheoryInputs{base.strong_convexity(), *tr, 2.0 * *tr2 / (*tr * *tr), 2.0, spec.dim()};
}

double assumption2_rhs(double kappa_inf) {
  const double k = kappa_inf / (2.0 * std::sqrt(2.0 * std::numbers::pi));
  return 0.25 * std::min(std_normal_cdf(k) - 0.5, std_normal_cdf(-3.0 * k));
}

EpsOptimum b_high_opt(double q, double v) {
  check_q_v(q, v);
  if (v == 0.0) return {-2.0 * std_normal_quantile(q), 0.0};
  const double lo = 0.5 * std::log(2.0 * v / (1.0 - 2.0 * q)) + kInset;
  const double hi = std::max(lo + 1.0, std::log(1e8));
  auto [t, neg] = golden_min([&](double x) { return -b_high_term(q, v, std::exp(x)); }, lo, hi);
  return {-neg, std::exp(t)};
}

double b_high(double q, double v) { return b_high_opt(q, v).value; }

EpsOptimum b_low_opt(double q, double v) {
  check_q_v(q, v);
  if (!(v < q)) throw Unsupported("b_low needs v_std < q");
  if (v == 0.0) return {-2.0 * std_normal_quantile(q), 0.0};
  const double lo = 0.5 * std::log(v / q) + kInset;
  const double hi = -kInset;
  if (!(lo < hi)) throw Unsupported("b_low: epsilon domain is empty");
  auto [t, val] = golden_min([&](double x) { return b_low_term(q, v, std::exp(x)); }, lo, hi);
  if (!(val <= kLowCap)) throw Unsupported("b_low diverges (v_std too close to q)");
  return {val, std::exp(t)};
}

double b_low(double q, double v) { return b_low_opt(q, v).value; }

Interval feasible_q_interval(double v, double kappa_inf) {
  if (!(v >= 0.0 && v < 0.5)) throw Unsupported("I_q is empty: v_std_sup must lie in [0, 1/2)");
  if (!(kappa_inf > 0.0)) throw InvalidInput("kappa_inf must be positive");
  const double target = kappa_inf * kSqrt2OverPi;
  const double top = 0.5 - 1e-15;
  if (b_low_raw(top, v) >= target) {
    throw Unsupported("I_q is empty: b_low(q) >= kappa_inf sqrt(2/pi) for every q < 1/2");
  }
  const double q_star = bisect([&](double q) { return b_low_raw(q, v) >= target; }, v, top);
  return {std::max(v, q_star), 0.5};
}

Interval feasible_q_high_interval(double q_low, double v, const EsParams& params) {
  check_q_v(q_low, v);
  const double target = b_low(q_low, v) * params.alpha_down / params.alpha_up;
  const double bottom = 1e-300;
  if (b_high(bottom, v) < target) return {0.0, 0.5};
  const double q = bisect([&](double x) { return b_high(x, v) >= target; }, bottom, 0.5 - 1e-15);
  return {q, 0.5};
}

double q_floor(double q_low, double v) {
  check_q_v(q_low, v);
  const double target = b_low(q_low, v);
  // b_high(q) <= 2 Phi^{-1}(1-q) <= b_low(q), so the crossing sits at or below q_low
  const double q = bisect([&](double x) { return b_high(x, v) >= target; }, 1e-300, q_low);
  if (!(q > 0.0)) throw Unsupported("q_floor collapsed to 0");
  return q;
}

double TheoryConstants::log_ratio() const { return std::log(alpha_up / alpha_down); }

namespace {

// Everything that depends on q_low only.
struct LowRow {
  double q_low;
  double b_low;
  double q_floor;
  double q_high_min;
};

LowRow make_row(const TheoryInputs& in, const EsParams& params, double q_low) {
  LowRow row{q_low, b_low(q_low, in.v_std_sup), 0.0, 0.0};
  row.q_floor = q_floor(q_low, in.v_std_sup);
  row.q_high_min = feasible_q_high_interval(q_low, in.v_std_sup, params).lower;
  return row;
}

TheoryConstants assemble(const TheoryInputs& in, const EsParams& params, const LowRow& row,
                         double q_high) {
  TheoryConstants c{};
  c.q_low = row.q_low;
  c.q_high = q_high;
  c.b_low = row.b_low;
  c.b_high = b_high(q_high, in.v_std_sup);
  c.kappa_inf = in.kappa_inf;
  c.e_q = in.e_q;
  c.L = in.L;
  c.v_std_sup = in.v_std_sup;
  c.q_floor = row.q_floor;
  c.alpha_up = params.alpha_up;
  c.alpha_down = params.alpha_down;
  c.p_target = p_target(params);
  c.dim = in.dim;
  c.s = std::numbers::sqrt2 * params.alpha_up * c.b_high;
  c.ell = std::numbers::sqrt2 * params.alpha_down * c.b_low;
  c.w = 0.5 * (in.L / in.e_q) * (c.b_high / in.kappa_inf) *
        (kSqrt2OverPi * in.kappa_inf - c.b_low) * c.q_floor;
  c.v = std::min(c.w / (4.0 * params.log_ratio()), 1.0);
  c.b_upper = pair_objective(c);
  return c;
}

void check_inputs(const TheoryInputs& in) {
  if (!(in.L > 0.0) || !(in.e_q > 0.0)) throw InvalidInput("L and E_Q must be positive");
  if (!(in.v_std_sup >= 0.0) || !std::isfinite(in.v_std_sup)) {
    throw InvalidInput("v_std_sup must be finite and >= 0");
  }
  if (!(in.kappa_inf >= 1.0)) throw InvalidInput("kappa_inf must be >= 1");
  if (in.dim < 1) throw InvalidInput("dimension must be >= 1");
  const double rhs = assumption2_rhs(in.kappa_inf);
  if (!(in.v_std_sup < rhs)) {
    throw Unsupported("Assumption 2 violated: v_std_sup = " + format_double(in.v_std_sup) +
                      " >= " + format_double(rhs));
  }
}

}  // namespace

TheoryConstants build_constants(const TheoryInputs& in, const EsParams& params, double q_low,
                                double q_high) {
  check_inputs(in);
  const Interval iq = feasible_q_interval(in.v_std_sup, in.kappa_inf);
  if (!(q_low > iq.lower && q_low < iq.upper)) {
    throw Unsupported("q_low = " + format_double(q_low) + " is outside I_q = (" +
                      format_double(iq.lower) + ", 1/2)");
  }
  const double p = p_target(params);
  if (!(q_low < p && p < q_high)) {
    throw Unsupported("need q_low < p_target < q_high, p_target = " + format_double(p));
  }
  if (!(q_high < 0.5)) throw Unsupported("q_high must be < 1/2");
  const LowRow row = make_row(in, params, q_low);
  if (!(q_high > row.q_high_min)) {
    throw Unsupported("q_high = " + format_double(q_high) + " is outside I_q^high = (" +
                      format_double(row.q_high_min) + ", 1/2)");
  }
  TheoryConstants c = assemble(in, params, row, q_high);
  if (!(c.s < c.ell)) throw Unsupported("s < ell fails for this pair");
  if (!(c.w > 0.0)) throw Unsupported("w is not positive for this pair");
  return c;
}

double pair_objective(const TheoryConstants& c) {
  return 0.5 * std::min(c.w / 4.0, c.log_ratio()) *
         std::min(c.p_target - c.q_low, c.q_high - c.p_target);
}

TheoryConstants b_upper(const TheoryInputs& in, const EsParams& params,
                        const BUpperOptions& options) {
  check_inputs(in);
  if (options.grid < 2) throw InvalidInput("b_upper grid must have at least 2 points per axis");
  const Interval iq = feasible_q_interval(in.v_std_sup, in.kappa_inf);
  const double p = p_target(params);
  if (!(p > iq.lower && p < 0.5)) {
    throw Unsupported("p_target = " + format_double(p) + " is outside I_q = (" +
                      format_double(iq.lower) + ", 1/2)");
  }
  if (options.trace) *options.trace << "q_low,q_high,objective\n";

  const int n = options.grid;
  // Returns the pair objective, or -1 for infeasible pairs.
  auto evaluate = [&](const LowRow& row, double q_high, TheoryConstants* out) {
    if (!(q_high > std::max(p, row.q_high_min) && q_high < 0.5)) return -1.0;
    TheoryConstants c = assemble(in, params, row, q_high);
    if (!(c.s < c.ell) || !(c.w > 0.0)) return -1.0;
    if (out) *out = c;
    return c.b_upper;
  };
  auto row_at = [&](double q_low) { return make_row(in, params, q_low); };

  double best = -1.0;
  double best_low = 0.0;
  double best_high = 0.0;
  for (int i = 0; i < n; ++i) {
    const double q_low = iq.lower + (p - iq.lower) * (i + 0.5) / n;
    const LowRow row = row_at(q_low);
    const double h0 = std::max(p, row.q_high_min);
    if (!(h0 < 0.5)) continue;
    for (int j = 0; j < n; ++j) {
      const double q_high = h0 + (0.5 - h0) * (j + 0.5) / n;
      const double obj = evaluate(row, q_high, nullptr);
      if (options.trace) {
        *options.trace << format_double(q_low) << ',' << format_double(q_high) << ','
                       << format_double(obj) << '\n';
      }
      if (obj > best) {
        best = obj;
        best_low = q_low;
        best_high = q_high;
      }
    }
  }
  if (!(best > 0.0)) throw Unsupported("no feasible (q_low, q_high) pair on the search grid");

  if (options.refine) {
    // Alternate 1-D golden-section searches within one grid cell of the best point.
    const double low_step = (p - iq.lower) / n;
    for (int round = 0; round < 3; ++round) {
      const LowRow row = row_at(best_low);
      const double h0 = std::max(p, row.q_high_min);
      const double high_step = (0.5 - h0) / n;
      auto [qh, negh] = golden_min(
          [&](double x) { return -evaluate(row, x, nullptr); },
          std::max(h0, best_high - high_step), std::min(0.5, best_high + high_step));
      if (-negh > best) {
        best = -negh;
        best_high = qh;
      }
      auto [ql, negl] = golden_min(
          [&](double x) {
            if (!(x > iq.lower && x < p)) return 1.0;
            return -evaluate(row_at(x), best_high, nullptr);
          },
          std::max(iq.lower, best_low - low_step), std::min(p, best_low + low_step));
      if (-negl > best) {
        best = -negl;
        best_low = ql;
      }
    }
  }

  TheoryConstants c{};
  evaluate(row_at(best_low), best_high, &c);
  c.b_upper = best;
  return c;
}

double potential_from_logs(double log_f, double log_sigma, const TheoryConstants& c) {
  const double half_log_lf = 0.5 * (std::log(c.L) + log_f);
  const double log_eq = std::log(c.e_q);
  const double small = std::log(c.s) + half_log_lf - log_sigma - log_eq;
  const double large = log_sigma + log_eq - std::log(c.ell) - half_log_lf;
  return log_f + c.v * std::max(small, 0.0) + c.v * std::max(large, 0.0);
}

double potential_value(const EsState& state, const ObjectiveSpec& spec, const TheoryConstants& c) {
  const double f = spec.canonical_eval(state.m);
  if (!(f > 0.0)) throw InvalidInput("potential is undefined at the optimum");
  return potential_from_logs(std::log(f), state.log_sigma, c);
}

nlohmann::json to_json(const TheoryConstants& c) {
  return nlohmann::json{{"q_low", c.q_low},         {"q_high", c.q_high},
                        {"b_high", c.b_high},       {"b_low", c.b_low},
                        {"kappa_inf", c.kappa_inf}, {"e_q", c.e_q},
                        {"L", c.L},                 {"v_std_sup", c.v_std_sup},
                        {"q_floor", c.q_floor},     {"s", c.s},
                        {"ell", c.ell},             {"w", c.w},
                        {"w_over_L_over_e_q", c.w / (c.L / c.e_q)},
                        {"v", c.v},                 {"b_upper", c.b_upper},
                        {"alpha_up", c.alpha_up},   {"alpha_down", c.alpha_down},
                        {"p_target", c.p_target},   {"dim", c.dim}};
}

}  // namespace esrate
