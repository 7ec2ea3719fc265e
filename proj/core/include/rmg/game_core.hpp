#pragma once

#include <span>

#include "rmg/types.hpp"

namespace rmg {

enum class PlayerId { one = 1, two = 2 };

// KL(p || q) with the 0 log 0 convention. Requires support(p) within
// support(q); throws SupportError otherwise and DimensionError on length
// mismatch.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// log sum_a ref(a) exp(logits(a)) over ref's support, max-subtracted.
double log_sum_exp_over_support(std::span<const double> ref,
                                std::span<const double> logits);

// Smallest strictly positive reference probability across both players and
// all (h, s); 1.0 for deterministic references.
double min_ref_prob(const JointPolicy& refs);

// True iff 4 H^2 (eta + log(1/alpha)) <= 1, the regime in which the
// density-ratio guarantees apply.
bool check_side_condition(double eta, int horizon, double alpha);

// Per-step value scale 1 + eta^{-1} log(1/alpha); best-response values at
// step h are bounded by (H - h + 1) times this.
double per_step_value_scale(double eta, double alpha);

// Regularized policy evaluation by backward induction:
//   Q_h = r_h + P_h V_{h+1}
//   V_h = E_pi[Q_h] - eta^{-1} KL(pi_1||ref_1) + eta^{-1} KL(pi_2||ref_2)
// Returns both V and the per-step Q tables.
ValueTables evaluate_policy(const MarkovGame& game, const JointPolicy& policy,
                            const RegularizationConfig& cfg);

struct BestResponseResult {
  ValueTables values;           // V_h of the best response, all steps
  PolicyTable responder_policy; // the responder's implied Gibbs stage policies
};

// Regularized best-response values against a fixed opponent, computed with
// the closed-form log-sum-exp backward induction. For responder one the
// opponent is `fixed.p2`; for responder two it is `fixed.p1`.
BestResponseResult best_response_values(const MarkovGame& game,
                                        const JointPolicy& fixed,
                                        PlayerId responder,
                                        const RegularizationConfig& cfg);

// E_{s ~ rho}[ V_1^{best-vs-p2}(s) - V_1^{p1-vs-best}(s) ]; zero exactly at
// the regularized equilibrium. Values in [-1e-9, 0) clamp to 0; anything
// below -1e-9 raises InternalError.
double duality_gap(const MarkovGame& game, const JointPolicy& policy,
                   const RegularizationConfig& cfg);

// Largest absolute deviation of `tables` from the evaluation recursion that
// should have produced it: Q against r + P V_next, V against
// E_pi[Q] - eta^{-1} KL_1 + eta^{-1} KL_2, and the terminal row against
// zero. Requires tables.q to be present.
double value_consistency_residual(const MarkovGame& game,
                                  const JointPolicy& policy,
                                  const RegularizationConfig& cfg,
                                  const ValueTables& tables);

}  // namespace rmg
