#pragma once

#include <cstddef>
#include <iosfwd>

#include "esrate/engine.hpp"
#include "esrate/objectives.hpp"

namespace esrate {

/// Class-level quantities the bound machinery consumes. For quadratics these
/// are exact (see exact_theory_inputs); otherwise they come from sampling.
struct TheoryInputs {
  double L;            // strong convexity modulus
  double e_q;          // E_Q = sup over states of E[Q]
  double v_std_sup;    // sup over states of Var[Q] / E[Q]^2
  double kappa_inf;    // inf over states of E[Q] / E[Q 1{z_e <= 0}]
  std::size_t dim;
};

//! L, Tr(H), 2 Tr(H^2)/Tr(H)^2 and kappa = 2 for quadratic specs.
TheoryInputs exact_theory_inputs(const ObjectiveSpec& spec);

//! 1/4 min{Phi(k/(2 sqrt(2 pi))) - 1/2, 1 - Phi(3k/(2 sqrt(2 pi)))}
double assumption2_rhs(double kappa_inf);

struct EpsOptimum {
  double value;
  double epsilon;  // 0 marks the v_std = 0 limit
};

//! sup over eps > sqrt(2v/(1-2q)) of 2 Phi^{-1}(1 - q - v/eps^2) / (1 + eps).
EpsOptimum b_high_opt(double q, double v_std);
double b_high(double q, double v_std);

//! inf over eps in (sqrt(v/q), 1) of 2 Phi^{-1}(1 - q + v/eps^2) / (1 - eps).
//! Values beyond 1e6 are treated as divergent and throw Unsupported.
EpsOptimum b_low_opt(double q, double v_std);
double b_low(double q, double v_std);

struct Interval {
  double lower;
  double upper;
};

//! I_q = (max{v, sup{q : kappa sqrt(2/pi) <= b_low(q)}}, 1/2).
Interval feasible_q_interval(double v_std_sup, double kappa_inf);

//! I_q^high(q_low) = (sup{q : b_low(q_low) <= (up/down) b_high(q)}, 1/2).
Interval feasible_q_high_interval(double q_low, double v_std_sup, const EsParams& params);

//! inf{q : b_high(q) < b_low(q_low)}
double q_floor(double q_low, double v_std_sup);

struct TheoryConstants {
  double q_low;
  double q_high;
  double b_high;     // b_high(q_high)
  double b_low;      // b_low(q_low)
  double kappa_inf;
  double e_q;
  double L;
  double v_std_sup;
  double q_floor;
  double s;
  double ell;
  double w;
  double v;
  double b_upper;    // rate-bound objective at this pair, or its supremum
  double alpha_up;
  double alpha_down;
  double p_target;
  std::size_t dim;

  double log_ratio() const;
};

/*!
 * Populate every constant for one (q_low, q_high) pair.
 *
 * Throws Unsupported naming the first violated condition: Assumption 2,
 * q_low in I_q, q_low < p_target < q_high, q_high in I_q^high, s < ell.
 *
 * w carries a factor 1/2 relative to the literal product
 * (L/E_Q)(b_high/kappa)(sqrt(2/pi) kappa - b_low) Q, matching the large-d
 * limit Phi^{-1}(1-q_high)(sqrt(2/pi) - Phi^{-1}(1-q_low)) q_low. A smaller
 * positive w only weakens the drift claims, so every bound stays valid.
 */
TheoryConstants build_constants(const TheoryInputs& in, const EsParams& params, double q_low,
                                double q_high);

//! 1/2 min{w/4, log(up/down)} min{p - q_low, q_high - p}
double pair_objective(const TheoryConstants& c);

struct BUpperOptions {
  int grid = 64;
  bool refine = true;
  std::ostream* trace = nullptr;  // CSV q_low,q_high,objective
};

//! Supremum of the rate-bound objective over feasible pairs; returns the constants at the maximiser
//! with b_upper set to the supremum. Unsupported when p_target is outside I_q.
TheoryConstants b_upper(const TheoryInputs& in, const EsParams& params,
                        const BUpperOptions& options = {});

//! V from log f(m) and log sigma, evaluated entirely in the log domain.
double potential_from_logs(double log_f, double log_sigma, const TheoryConstants& c);
double potential_value(const EsState& state, const ObjectiveSpec& spec, const TheoryConstants& c);

nlohmann::json to_json(const TheoryConstants& c);

}  // namespace esrate
