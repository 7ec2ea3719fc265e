#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rmg/types.hpp"

namespace rmg {

enum class Direction { maximize, minimize };

// One KL-regularized bilinear stage game. Player 1 maximizes
// pi1' payoff pi2 - eta^{-1} KL(pi1||ref1) + eta^{-1} KL(pi2||ref2).
struct StageGame {
  int num_actions_p1 = 0;
  int num_actions_p2 = 0;
  std::vector<double> payoff;  // row-major [a1][a2]
  double eta = 1.0;
  std::vector<double> ref1;
  std::vector<double> ref2;

  double at(int a1, int a2) const {
    return payoff[static_cast<std::size_t>(a1) * num_actions_p2 + a2];
  }
};

void validate_stage_game(const StageGame& sg);

// Closed-form regularized best response: proportional to
// ref(a) exp(+-eta q(a)) on ref's support (+ for maximize).
std::vector<double> gibbs_response(std::span<const double> q, double eta,
                                   std::span<const double> ref,
                                   Direction direction);

double stage_objective(const StageGame& sg, std::span<const double> pi1,
                       std::span<const double> pi2);

// max_mu obj(mu, pi2) - min_nu obj(pi1, nu), both inner problems in closed
// form; non-negative up to float noise.
double stage_exploitability(const StageGame& sg, std::span<const double> pi1,
                            std::span<const double> pi2);

struct StageSolution {
  std::vector<double> pi1;
  std::vector<double> pi2;
  double value = 0.0;
  long iterations = 0;       // mirror updates applied before certification
  double exploitability = 0.0;  // certified value at return
};

// Mirror-descent self-play with stepsize 2 eta / (t + 2), initialized at the
// references (or `init` when given), run until the exploitability
// certificate reaches `tol`. Throws ConvergenceError carrying the last
// certified exploitability if max_iter updates are exhausted.
StageSolution solve_stage_equilibrium(
    const StageGame& sg, double tol = 1e-10, long max_iter = 1'000'000,
    const std::optional<std::pair<std::vector<double>, std::vector<double>>>&
        init = std::nullopt);

}  // namespace rmg
