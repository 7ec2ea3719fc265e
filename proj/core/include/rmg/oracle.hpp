#pragma once

#include <span>
#include <vector>

#include "rmg/stage_solver.hpp"

namespace rmg {

// Independent grid-search references for tiny stage games (<= 3 actions per
// player). Deliberately dumb: exhaustive enumeration of one simplex with the
// other side solved in closed form, no reuse of the production solver path.

struct BruteForceStageResult {
  std::vector<double> pi1;
  std::vector<double> pi2;
  double value = 0.0;     // max-min value from the player-1 grid pass
  double accuracy = 0.0;  // order-of-magnitude value-accuracy estimate
};

// Grid-searches player 1's simplex for max_mu [min_nu obj(mu, nu)] with the
// inner minimization exact via the Gibbs closed form, then symmetrically
// grid-searches player 2's simplex. grid_res must lie in [1e-5, 1e-2].
BruteForceStageResult brute_force_stage_ne(const StageGame& sg,
                                           double grid_res);

// Grid-maximizes <pi, q> - eta^{-1} KL(pi || ref) over the simplex.
double brute_force_best_response_value(std::span<const double> q, double eta,
                                       std::span<const double> ref,
                                       double grid_res);

}  // namespace rmg
