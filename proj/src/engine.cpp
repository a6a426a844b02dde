#include "esrate/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "esrate/error.hpp"
#include "esrate/format.hpp"
#include "esrate/rng.hpp"

namespace esrate {

EsParams EsParams::make(double alpha_up, double alpha_down) {
  if (!(alpha_up > 1.0) || !std::isfinite(alpha_up)) throw InvalidInput("alpha_up must be > 1");
  if (!(alpha_down > 0.0 && alpha_down < 1.0)) throw InvalidInput("alpha_down must lie in (0, 1)");
  return EsParams{alpha_up, alpha_down};
}

EsParams EsParams::for_target(double alpha_up, double target) {
  if (!(target > 0.0 && target < 1.0)) throw InvalidInput("p_target must lie in (0, 1)");
  if (!(alpha_up > 1.0)) throw InvalidInput("alpha_up must be > 1");
  // p = a / (log up + a) with a = log(1/alpha_down)
  const double a = target * std::log(alpha_up) / (1.0 - target);
  return make(alpha_up, std::exp(-a));
}

double EsParams::log_up() const { return std::log(alpha_up); }
double EsParams::log_down() const { return std::log(alpha_down); }

double p_target(const EsParams& params) { return -params.log_down() / params.log_ratio(); }

std::string_view alpha_rule_name(AlphaRule rule) {
  switch (rule) {
    case AlphaRule::Const:
      return "const";
    case AlphaRule::Sqrt:
      return "sqrt";
    case AlphaRule::Dim:
      return "dim";
  }
  return "const";
}

AlphaRule parse_alpha_rule(std::string_view text) {
  if (text == "const") return AlphaRule::Const;
  if (text == "sqrt") return AlphaRule::Sqrt;
  if (text == "dim") return AlphaRule::Dim;
  throw InvalidInput("unknown alpha rule '" + std::string(text) + "' (const|sqrt|dim)");
}

EsParams alpha_preset(AlphaRule rule, double c, std::size_t d) {
  if (!(c > 0.0)) throw InvalidInput("alpha rule constant c must be > 0");
  if (d < 1) throw InvalidInput("dimension must be >= 1");
  const double dd = static_cast<double>(d);
  double exponent = c;
  if (rule == AlphaRule::Sqrt) exponent = c / std::sqrt(dd);
  if (rule == AlphaRule::Dim) exponent = c / dd;
  return EsParams::make(std::exp(exponent), std::exp(-0.25 * exponent));
}

double EsState::sigma() const { return std::exp(log_sigma); }

StepOutcome step(const EsState& state, std::span<const double> z, const ObjectiveSpec& spec,
                 const EsParams& params) {
  if (z.size() != state.m.size() || state.m.size() != spec.dim()) {
    throw InvalidInput("step: dimension mismatch between state, z and objective");
  }
  const double sigma = state.sigma();
  Vector x(state.m.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = state.m[i] + sigma * z[i];
  if (spec.eval(x) <= spec.eval(state.m)) {
    return {EsState{std::move(x), state.log_sigma + params.log_up()}, true};
  }
  return {EsState{state.m, state.log_sigma + params.log_down()}, false};
}

std::string_view stop_reason_name(StopReason reason) {
  return reason == StopReason::FFloor ? "f_floor" : "budget";
}

std::int64_t default_budget(std::size_t d) { return 10000 + 1000 * static_cast<std::int64_t>(d); }

namespace {

double log_distance(std::span<const double> m, std::span<const double> x_opt) {
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double diff = m[i] - x_opt[i];
    sum += diff * diff;
  }
  return 0.5 * std::log(sum);
}

}  // namespace

Trajectory run(const ObjectiveSpec& spec, const EsParams& params, const EsState& init,
               std::int64_t budget, double f_floor, std::uint64_t seed,
               const StepObserver& observer) {
  if (budget < 1) throw InvalidInput("budget must be >= 1");
  if (!(f_floor > 0.0)) throw InvalidInput("f_floor must be > 0");
  if (init.m.size() != spec.dim()) throw InvalidInput("initial state has the wrong dimension");
  if (!std::isfinite(init.log_sigma)) throw InvalidInput("initial log sigma must be finite");
  const Vector x_opt = spec.optimum();
  if (std::equal(init.m.begin(), init.m.end(), x_opt.begin())) {
    throw InvalidInput("initial point coincides with the optimum");
  }

  const double log_up = params.log_up();
  const double log_down = params.log_down();
  const std::size_t d = spec.dim();

  RandomStream rng(seed, 1);
  EsState state = init;
  Vector x(d);
  Vector z(d);
  double f_m = spec.eval(state.m);
  double canon_m = spec.canonical_eval(state.m);

  Trajectory traj;
  traj.seed = seed;
  traj.points.reserve(static_cast<std::size_t>(budget) + 1);
  traj.points.push_back({0, log_distance(state.m, x_opt), std::log(canon_m), state.log_sigma, false});
  if (observer) observer(0, state, false);

  std::int64_t t = 0;
  bool floored = canon_m < f_floor;
  while (!floored && t < budget) {
    rng.fill_normal(z);
    const double sigma = state.sigma();
    for (std::size_t i = 0; i < d; ++i) x[i] = state.m[i] + sigma * z[i];
    const double f_x = spec.eval(x);
    const bool success = f_x <= f_m;
    if (success) {
      std::swap(state.m, x);
      f_m = f_x;
      canon_m = spec.is_composite() ? spec.canonical_eval(state.m) : f_x;
      state.log_sigma += log_up;
    } else {
      state.log_sigma += log_down;
    }
    ++t;
    traj.points.push_back({t, log_distance(state.m, x_opt), std::log(canon_m), state.log_sigma, success});
    if (observer) observer(t, state, success);
    floored = canon_m < f_floor;
  }

  traj.t_final = t;
  traj.stop_reason = floored ? StopReason::FFloor : StopReason::Budget;
  traj.final_state = std::move(state);
  return traj;
}

EsState init_at(const ObjectiveSpec& spec, Vector m0) {
  if (m0.size() != spec.dim()) throw InvalidInput("m0 has the wrong dimension");
  const ObjectiveSpec& base = spec.canonical();
  Vector shifted = m0;
  const Vector x_opt = spec.optimum();
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= x_opt[i];
  const double grad_norm = norm(base.grad(shifted));
  if (!(grad_norm > 0.0)) throw InvalidInput("m0 coincides with the optimum");
  const auto trace = base.trace_hessian();
  const double divisor = trace ? *trace : static_cast<double>(spec.dim()) * base.smoothness();
  return EsState{std::move(m0), std::log(grad_norm / divisor)};
}

EsState init_default(const ObjectiveSpec& spec, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  const Vector x_opt = spec.optimum();
  Vector m0(spec.dim());
  do {
    rng.fill_normal(m0);
  } while (std::all_of(m0.begin(), m0.end(), [](double v) { return v == 0.0; }));
  for (std::size_t i = 0; i < m0.size(); ++i) m0[i] += x_opt[i];
  return init_at(spec, std::move(m0));
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride) {
  if (stride == 0) stride = 1;
  out << "t,log_dist,log_f,log_sigma,success\n";
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    if (i % stride != 0 && i + 1 != traj.points.size()) continue;
    const auto& p = traj.points[i];
    out << p.t << ',' << format_double(p.log_dist) << ',' << format_double(p.log_f) << ','
        << format_double(p.log_sigma) << ',' << (p.success ? 1 : 0) << '\n';
  }
}

}  // namespace esrate
