#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "rmg/offline_data.hpp"
#include "rmg/stage_solver.hpp"
#include "rmg/types.hpp"

namespace rmg {

// Q-estimation strategies for the backward-induction solvers.
struct TabularFitter {};
// Least-squares selection from a finite class; one class shared across all
// steps, or one per step (vector of size H).
struct FiniteClassFitter {
  std::vector<FunctionClass> classes;  // size 1 (shared) or horizon
};
// Bypasses estimation entirely; used by sanity oracles that inject exact
// Q-values.
struct FixedQFitter {
  std::vector<QTable> tables;  // one per step
};
using FitterSpec = std::variant<TabularFitter, FiniteClassFitter, FixedQFitter>;

struct StageCertificate {
  int step = 0;   // 0-based
  int state = 0;
  long iterations = 0;
  double exploitability = 0.0;
};

struct SolveResult {
  JointPolicy policy;
  std::vector<QTable> q_hat;  // fitted table per step
  ValueTable v_hat;           // steps 0..H, terminal row zero
  std::vector<StageCertificate> stage_certificates;
  // Tabular coverage per step: 1 where (s, a1, a2) had data. Empty for
  // non-tabular fitters.
  std::vector<std::vector<std::uint8_t>> coverage;
  std::vector<int> empty_cells_per_step;
};

// Backward induction from step H to 1: regression targets from the next-step
// value estimate, least-squares Q fit, then an exact-to-tolerance regularized
// stage equilibrium per state whose value becomes the step's V.
SolveResult rose_solve(const OfflineDataset& dataset, const GameDims& dims,
                       const RegularizationConfig& cfg, const FitterSpec& fitter,
                       double stage_tol = 1e-10);

// Model-based variant: identical backward induction but with exact rewards
// and exact transition expectations from `game` in place of fitted tables.
// Produces the regularized equilibrium of the true game to stage_tol.
SolveResult solve_exact(const MarkovGame& game, const RegularizationConfig& cfg,
                        double stage_tol = 1e-10);

}  // namespace rmg
