#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "esrate/objectives.hpp"

namespace esrate {

/// Step-size factors of the success rule: sigma *= alpha_up on success,
/// sigma *= alpha_down on failure.
struct EsParams {
  double alpha_up;
  double alpha_down;

  //! Validating constructor: alpha_up > 1, alpha_down in (0, 1).
  static EsParams make(double alpha_up, double alpha_down);
  //! Choose alpha_down so that p_target(params) == p_target.
  static EsParams for_target(double alpha_up, double p_target);

  double log_up() const;
  double log_down() const;
  //! log(alpha_up / alpha_down)
  double log_ratio() const { return log_up() - log_down(); }
};

//! log(1/alpha_down) / log(alpha_up/alpha_down)
double p_target(const EsParams& params);

enum class AlphaRule { Const, Sqrt, Dim };

std::string_view alpha_rule_name(AlphaRule rule);
AlphaRule parse_alpha_rule(std::string_view text);

//! alpha_up = exp(c), exp(c/sqrt(d)) or exp(c/d); alpha_down = alpha_up^(-1/4).
EsParams alpha_preset(AlphaRule rule, double c, std::size_t d);

struct EsState {
  Vector m;
  double log_sigma;

  double sigma() const;
};

struct StepOutcome {
  EsState state;
  bool success;
};

/// One transition of the chain. Ties f(x) == f(m) are accepted.
StepOutcome step(const EsState& state, std::span<const double> z, const ObjectiveSpec& spec,
                 const EsParams& params);

enum class StopReason { Budget, FFloor };

std::string_view stop_reason_name(StopReason reason);

struct TrajectoryPoint {
  std::int64_t t;
  double log_dist;   // log ||m_t - x_opt||
  double log_f;      // log of the canonical (pre-transform) value
  double log_sigma;
  bool success;      // outcome of the transition that produced this point
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;  // t = 0 .. t_final
  std::int64_t t_final = 0;
  StopReason stop_reason = StopReason::Budget;
  std::uint64_t seed = 0;
  EsState final_state;
};

using StepObserver = std::function<void(std::int64_t t, const EsState& state, bool success)>;

inline constexpr double kDefaultFFloor = 1e-100;

//! 10000 + 1000 d
std::int64_t default_budget(std::size_t d);

/*!
 * Iterate the chain from init with z_t drawn from RandomStream(seed, 1).
 *
 * Stops after budget transitions or as soon as the canonical value drops
 * below f_floor, in which case t_final is the iteration that crossed it.
 * The observer, if set, sees every state including the initial one.
 */
Trajectory run(const ObjectiveSpec& spec, const EsParams& params, const EsState& init,
               std::int64_t budget, double f_floor, std::uint64_t seed,
               const StepObserver& observer = {});

//! m0 ~ x_opt + N(0, I) from RandomStream(seed, 0), sigma0 per init_at.
EsState init_default(const ObjectiveSpec& spec, std::uint64_t seed);

//! sigma0 = ||grad f(m0)|| / Tr(H) for quadratics, ||grad f(m0)|| / (d U) otherwise.
EsState init_at(const ObjectiveSpec& spec, Vector m0);

//! CSV `t,log_dist,log_f,log_sigma,success`, every stride-th point plus the last.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride = 1);

}  // namespace esrate
