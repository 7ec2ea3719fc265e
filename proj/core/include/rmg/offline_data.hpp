#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rmg/types.hpp"

namespace rmg {

// One dataset record. `step` is 0-based in memory; the JSONL format writes
// it 1-based.
struct Transition {
  int traj = 0;
  int step = 0;
  int s = 0;
  int a1 = 0;
  int a2 = 0;
  double reward = 0.0;
  int s_next = 0;

  bool operator==(const Transition&) const = default;
};

// n trajectories of (s, a1, a2, noisy r, s') tuples, stored grouped by step:
// all step-0 records first, each step block ordered by trajectory id.
class OfflineDataset {
 public:
  OfflineDataset() = default;
  OfflineDataset(GameDims dims, std::vector<Transition> records);

  const GameDims& dims() const { return dims_; }
  int num_trajectories() const { return num_trajectories_; }
  const std::vector<Transition>& records() const { return records_; }
  std::span<const Transition> step_records(int h) const;

 private:
  GameDims dims_;
  int num_trajectories_ = 0;
  std::vector<Transition> records_;
};

enum class BehaviorKind { uniform, refs, custom };

// Builds the data-collection policy. `refs`/`custom` must be supplied for
// the corresponding kinds.
JointPolicy make_behavior_policy(const GameDims& dims, BehaviorKind kind,
                                 const JointPolicy* refs = nullptr,
                                 const JointPolicy* custom = nullptr);

// Samples n independent trajectories under `behavior` with Gaussian reward
// noise of standard deviation noise_sigma. Each trajectory draws from its
// own counter-based sub-stream keyed by (seed, "traj", trajectory id), so
// the result is independent of evaluation order. Strict mode rejects
// noise_sigma > 1 (the 1-sub-Gaussian assumption).
OfflineDataset sample_dataset(const MarkovGame& game,
                              const JointPolicy& behavior, int n,
                              double noise_sigma, std::uint64_t seed,
                              bool strict = true);

struct TabularFit {
  QTable q;
  std::vector<std::uint8_t> visited;  // 1 per (s, a1, a2) cell with data
  int empty_cells = 0;
};

// Per-cell mean of the regression targets r + v_next(s'); unvisited cells
// are zero and flagged in the coverage mask.
TabularFit fit_q_tabular(std::span<const Transition> records_h,
                         std::span<const double> v_next, const GameDims& dims);

// A finite, ordered collection of Q-table candidates (shared across steps).
struct FunctionClass {
  std::vector<QTable> members;
};

// Throws unless all members are dimension-consistent and, in strict mode,
// bounded by H * (1 + eta^{-1} log(1/alpha)).
void validate_function_class(const FunctionClass& fc, const GameDims& dims,
                             double eta, double alpha, bool strict = true);

// Least-squares selection over the class; ties break to the lowest index.
// Returns the chosen member and its index.
std::pair<QTable, int> fit_q_finite_class(
    std::span<const Transition> records_h, std::span<const double> v_next,
    const FunctionClass& fc);

struct StateActionPoint {
  int s = 0;
  int a1 = 0;
  int a2 = 0;
};

// Function-class extrapolation factor at `point` relative to the empirical
// distribution of `mu_samples`: the sup over member pairs with positive
// empirical mean-square difference of
//   (Q1 - Q2)^2(point) / mean[(Q1 - Q2)^2].
// Zero when the sup ranges over the empty set.
double d2_divergence(const FunctionClass& fc,
                     std::span<const StateActionPoint> mu_samples,
                     const StateActionPoint& point);

// Weighted variant: `mu` assigns a probability to every (s, a1, a2) cell of
// every step; used when the data distribution is known exactly.
double d2_divergence_weighted(const FunctionClass& fc, const QTable& mu_h,
                              const StateActionPoint& point);

struct ConcentrabilityOptions {
  int deviation_cap = 4096;   // exhaustive enumeration limit per player
  bool allow_sampling = true; // sample deviation_cap deviations beyond it
  std::uint64_t seed = 0;     // sampling sub-stream seed
};

struct ConcentrabilityEstimate {
  double value = 0.0;
  bool sampled = false;          // true if the deviation set was subsampled
  long deviations_evaluated = 0; // per player, summed over players
};

// Desk-scale estimate of the unilateral concentrability constant: the max
// over steps, players, and deterministic Markov deviations of
//   E_{d_h^{deviation x nash_{-i}}}[ D^2((s, a1, a2); mu_h) ],
// with visitation distributions computed by exact forward recursion and
// mu_h the exact step-h state-action marginal of `behavior`.
ConcentrabilityEstimate estimate_unilateral_concentrability(
    const MarkovGame& game, const FunctionClass& fc,
    const JointPolicy& behavior, const JointPolicy& nash,
    const RegularizationConfig& cfg, const ConcentrabilityOptions& options = {});

// Exact state-action visitation d_h(s, a1, a2) of a joint policy, one QTable
// shaped table per step.
std::vector<QTable> state_action_visitation(const MarkovGame& game,
                                            const JointPolicy& policy);

}  // namespace rmg
