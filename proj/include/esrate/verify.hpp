#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "esrate/analysis.hpp"
#include "esrate/theory.hpp"

#include "json.hpp"

namespace esrate {

struct VerifyOptions {
  std::int64_t n = 100000;
  std::uint64_t seed = 1;
  int seeds = 20;         // invariance: seeds per objective
  std::int64_t steps = 500;  // invariance: transitions per run
  std::size_t dim = 100;  // drift: sphere dimension
  double p_target = 0.45;  // drift: alpha_down chosen for this target with alpha_up = exp(1/d)
};

struct VerifyResult {
  nlohmann::json report;
  bool ok = false;
};

//! State sequences under every transform and under translation match the base run.
VerifyResult verify_invariance(const VerifyOptions& opt);
//! Lemma suite on sphere d in {10, 100} and H1 d=10 kappa=1 at five normalized steps in [0.1, 10].
VerifyResult verify_lemmas(const VerifyOptions& opt);
//! Assumption 2 verdicts on sphere d=1000 and d=2 against the 2/d oracle.
VerifyResult verify_assumption2(const VerifyOptions& opt);
//! Drift in each sigma regime on the sphere.
VerifyResult verify_drift(const VerifyOptions& opt);

VerifyResult run_verify(std::string_view suite, const VerifyOptions& opt);

//! One state per regime at the given m: sigma at half the small-sigma
//! threshold, twice the large-sigma threshold, and their geometric mean.
std::vector<EsState> plant_regime_states(const ObjectiveSpec& spec, const TheoryConstants& c,
                                         const Vector& m, double mean_q);

}  // namespace esrate
