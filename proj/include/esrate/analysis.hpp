#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "esrate/engine.hpp"
#include "esrate/moments.hpp"
#include "esrate/objectives.hpp"
#include "esrate/theory.hpp"

#include "json.hpp"

namespace esrate {

inline constexpr std::int64_t kMinSamples = 1000;

/*!
 * Q_z = (2/sigma^2)(f(m + sigma z) - f(m) - sigma <grad f(m), z>).
 *
 * When sigma ||z|| / ||m|| < 1e-6 the difference is dominated by rounding:
 * quadratics then return sum h_i z_i^2, other kinds throw Unsupported.
 * Composite specs are rejected.
 */
double sample_Q(const ObjectiveSpec& spec, const EsState& state, std::span<const double> z);

struct QStats {
  double mean_q = 0.0;
  double var_q = 0.0;
  double v_std = 0.0;
  double half_mean_q = 0.0;  // E[Q 1{z_e <= 0}]
  double kappa = 0.0;        // mean_q / half_mean_q
  std::int64_t n = 0;
  double se_mean = 0.0;
  double se_var = 0.0;
  double se_half = 0.0;
  double se_v_std = 0.0;
  double se_kappa = 0.0;
};

QStats estimate_q_stats(const ObjectiveSpec& spec, const EsState& state, std::int64_t n,
                        std::uint64_t seed);

//! (Tr H, 2 Tr H^2), the exact mean and variance of z^T H z.
std::pair<double, double> quadratic_q_exact(const ObjectiveSpec& spec);

//! sigma E[Q] / ||grad f(m)||, with E[Q] exact for quadratics and supplied otherwise.
double normalized_step(const ObjectiveSpec& spec, const EsState& state, double mean_q);

//! State at m with sigma chosen so that the normalized step equals sigma_bar.
EsState state_with_normalized_step(const ObjectiveSpec& spec, Vector m, double sigma_bar,
                                   double mean_q);

EstimateWithError estimate_success_prob(const ObjectiveSpec& spec, const EsState& state,
                                        std::int64_t n, std::uint64_t seed);

//! Mean of log(f(m + sigma z)/f(m)) 1{success}, on the canonical f.
EstimateWithError estimate_log_progress(const ObjectiveSpec& spec, const EsState& state,
                                        std::int64_t n, std::uint64_t seed);

enum class Verdict { Pass, Fail, Inconclusive };
std::string_view verdict_name(Verdict v);

struct CheckResult {
  std::string name;
  std::size_t state_id;
  double lhs;
  double rhs;
  double std_error;  // of lhs - rhs
  Verdict verdict;
};

//! pass iff lhs <= rhs + 3 se; inconclusive for n < 1000 or a non-finite se.
Verdict judge(double lhs, double rhs, double se, std::int64_t n);

struct CheckReport {
  std::vector<CheckResult> checks;

  bool all_pass() const;
  std::size_t count(Verdict v) const;
};

nlohmann::json to_json(const CheckReport& report);

/*!
 * Lemma-level inequalities per state, one common-random-number pass each:
 * Q bounds (mean, variance, half split), expected relative and log progress,
 * the exp|log progress| moment, and the success-probability sandwich at
 * eps in {0.1, 0.3, 0.5}.
 */
CheckReport check_lemma_suite(const ObjectiveSpec& spec, const std::vector<EsState>& states,
                              std::int64_t n, std::uint64_t seed);

struct Assumption2Report {
  bool holds = false;
  double margin = 0.0;  // rhs - lhs
  double v_std_sup = 0.0;
  double kappa_inf = 0.0;
  double rhs = 0.0;
  bool kappa_inconsistent = false;  // kappa_inf < 1 beyond its error band
  std::vector<QStats> per_state;
};

Assumption2Report check_assumption2(const ObjectiveSpec& spec, const std::vector<EsState>& states,
                                    std::int64_t n, std::uint64_t seed);

nlohmann::json to_json(const Assumption2Report& report);

//! 32 states by default: ||m|| on a log grid over [1e-3, 1e3] sqrt(d), random
//! directions, normalized steps (against the cap dU) spread over [0.1, 10].
std::vector<EsState> sample_states(const ObjectiveSpec& spec, std::size_t count, std::uint64_t seed);

struct SampledInputs {
  TheoryInputs inputs;
  double e_q_cap;  // d U, the conservative alternative to the sampled sup
  std::vector<EsState> states;
};

//! Exact for quadratics; sup/inf over sample_states otherwise.
SampledInputs theory_inputs_for(const ObjectiveSpec& spec, std::int64_t n, std::uint64_t seed,
                                std::size_t state_count = 32);

enum class DriftRegime { SmallSigma, LargeSigma, Reasonable };
std::string_view regime_name(DriftRegime r);

struct DriftEstimate {
  EstimateWithError delta_v;
  DriftRegime regime;
  double bound;  // the regime's upper bound on E[V(theta') - V(theta)]
};

//! Regime (i) sigma < s sqrt(L f)/(up E_Q); (ii) sigma > ell ||grad f||/(sqrt2 down E[Q]); else (iii).
DriftRegime classify_regime(const ObjectiveSpec& spec, const EsState& state,
                            const TheoryConstants& c, double mean_q);

//! Mean of V(theta') - V(theta) over n one-step transitions from state.
DriftEstimate estimate_drift(const ObjectiveSpec& spec, const EsState& state,
                             const EsParams& params, const TheoryConstants& c, std::int64_t n,
                             std::uint64_t seed, std::optional<double> mean_q = std::nullopt);

}  // namespace esrate
