#pragma once

#include <span>
#include <vector>

#include "rmg/game_core.hpp"
#include "rmg/rose.hpp"

namespace rmg {

// 2 eta / (t + 2); equals eta at t = 0 and decays harmonically.
double stepsize_schedule(long t, double eta);

// Expected payoff of each own action against the opponent's current mixture
// at state s: for player 1, q(a1) = sum_a2 opp(a2) Q(s, a1, a2); mirrored
// for player 2.
std::vector<double> marginal_payoff(const QTable& q_hat_h,
                                    std::span<const double> opponent, int s,
                                    PlayerId player);

// One KL-anchored mirror update:
//   ascent:  pi+(a) ~ pi(a)^(1-g/eta) exp(+g q(a)) ref(a)^(g/eta)
//   descent: same with exp(-g q(a)).
// Computed in log space and renormalized on ref's support. gamma must lie in
// (0, eta].
std::vector<double> mirror_step(std::span<const double> pi_cur,
                                std::span<const double> q, double gamma,
                                double eta, std::span<const double> ref,
                                Direction direction);

struct SosmdOptions {
  // Record per-iteration diagnostics against a freshly certified reference
  // equilibrium (costs one certified solve per (h, s)).
  bool record_diagnostics = false;
  double reference_tol = 1e-12;
  long reference_max_iter = 20'000'000;
  // Optional externally supplied stepsizes gamma_0..gamma_{T-1}; every entry
  // must lie in (0, eta]. Empty selects the default schedule.
  std::vector<double> custom_schedule;
};

struct IterateStats {
  int step = 0;          // 0-based h
  long t = 0;            // iterate index, 0 = initialization
  double gamma = 0.0;    // stepsize applied at this iterate
  double sup_kl_sum = 0.0;        // sup_s sum of both players' KL(ref_eq||pi_t)
  double sup_l1 = 0.0;            // sup_s max-player L1 distance to ref_eq
  double max_abs_log_ratio = 0.0; // sup over (s, player, a) |log(pi_t/ref)|
};

struct IterateDiagnostics {
  bool enabled = false;
  bool default_schedule = true;  // false means no convergence guarantees
  std::vector<IterateStats> rows;  // per (h, t), t = 0..T
  // kl_trace[h][s][t]: summed two-player KL to the reference equilibrium,
  // the quantity driven by the per-iteration descent recursion.
  std::vector<std::vector<std::vector<double>>> kl_trace;
  JointPolicy reference;  // certified equilibrium the traces compare against
};

// Backward induction with the same per-step Q fit as rose_solve, followed by
// T simultaneous mirror-descent self-play rounds per state; the returned
// policy is the last iterate and V is evaluated at it with both KL terms.
std::pair<SolveResult, IterateDiagnostics> sosmd_solve(
    const OfflineDataset& dataset, const GameDims& dims,
    const RegularizationConfig& cfg, long num_rounds, const FitterSpec& fitter,
    const SosmdOptions& options = {});

}  // namespace rmg
