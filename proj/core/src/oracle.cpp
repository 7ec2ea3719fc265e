#include "rmg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmg/errors.hpp"

namespace rmg {

namespace {

constexpr int kMaxOracleActions = 3;

void check_grid_res(double grid_res) {
  if (!(grid_res >= 1e-5 && grid_res <= 1e-2))
    throw DomainError("grid_res must lie in [1e-5, 1e-2]");
}

void check_oracle_capacity(std::size_t actions) {
  if (actions > kMaxOracleActions)
    throw CapacityError("brute-force oracle supports at most 3 actions");
  if (actions == 0) throw DimensionError("empty action set");
}

// Tables over the grid values k/K for k = 0..K: the value itself and
// x log x (0 at x = 0), so per-point entropy terms are lookups.
struct GridTables {
  int K;
  std::vector<double> value;
  std::vector<double> plogp;
};

GridTables make_grid_tables(double grid_res) {
  GridTables t;
  t.K = std::max(1, static_cast<int>(std::llround(1.0 / grid_res)));
  t.value.resize(t.K + 1);
  t.plogp.resize(t.K + 1);
  for (int k = 0; k <= t.K; ++k) {
    const double x = static_cast<double>(k) / t.K;
    t.value[k] = x;
    t.plogp[k] = k == 0 ? 0.0 : x * std::log(x);
  }
  return t;
}

struct GridOptimum {
  std::vector<double> point;
  double value;
};

// Enumerates the simplex grid and reports the optimum of
//   inner(pi) + kl_coeff * KL(pi || ref)
// where `inner` is supplied by the caller per grid point. `maximize` selects
// the comparison direction of the whole expression.
template <typename InnerFn>
GridOptimum grid_search_simplex(std::span<const double> ref, double kl_coeff,
                                const GridTables& grid, bool maximize,
                                InnerFn&& inner) {
  const std::size_t A = ref.size();
  std::vector<double> log_ref(A, 0.0);
  for (std::size_t a = 0; a < A; ++a)
    log_ref[a] = ref[a] > 0.0 ? std::log(ref[a]) : 0.0;

  GridOptimum best;
  best.value = maximize ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
  std::vector<double> pi(A);
  const auto consider = [&](std::span<const int> idx) {
    double cross = 0.0;
    double entropy = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      const int k = idx[a];
      pi[a] = grid.value[k];
      if (k > 0 && ref[a] <= 0.0) return;  // mass outside the reference
      entropy += grid.plogp[k];
      cross += pi[a] * log_ref[a];
    }
    const double kl = entropy - cross;
    const double candidate = inner(pi) + kl_coeff * kl;
    const bool better = maximize ? candidate > best.value
                                 : candidate < best.value;
    if (better) {
      best.value = candidate;
      best.point = pi;
    }
  };

  if (A == 1) {
    const int idx[1] = {grid.K};
    consider(idx);
  } else if (A == 2) {
    for (int i = 0; i <= grid.K; ++i) {
      const int idx[2] = {i, grid.K - i};
      consider(idx);
    }
  } else {
    for (int i = 0; i <= grid.K; ++i)
      for (int j = 0; j + i <= grid.K; ++j) {
        const int idx[3] = {i, j, grid.K - i - j};
        consider(idx);
      }
  }
  return best;
}

double oscillation(std::span<const double> q) {
  const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
  return *hi - *lo;
}

double min_positive(std::span<const double> ref) {
  double m = 1.0;
  for (const double v : ref)
    if (v > 0.0) m = std::min(m, v);
  return m;
}

// log sum ref(a) exp(sign_eta * q(a)) over ref's support.
double lse_support(std::span<const double> ref, std::span<const double> q,
                   double sign_eta) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ref.size(); ++a)
    if (ref[a] > 0.0) max_logit = std::max(max_logit, sign_eta * q[a]);
  double total = 0.0;
  for (std::size_t a = 0; a < ref.size(); ++a)
    if (ref[a] > 0.0) total += ref[a] * std::exp(sign_eta * q[a] - max_logit);
  return max_logit + std::log(total);
}

}  // namespace

namespace {

// One pass of the stage-game grid search. The point to minimize over the
// own-player simplex grid is
//   log( sum_b opp_ref(b) exp(sign_eta * q_opp(b)) ) + KL(pi || own_ref),
// where q_opp(b) is linear in the grid point. Exponentiating turns this
// into a product of per-coordinate table values, so each grid point costs
// only lookups and multiplies; the exact objective is evaluated once at the
// argmin. `payoff_at(a, b)` indexes own action a and opponent action b.
template <typename PayoffFn>
GridOptimum stage_grid_pass(std::span<const double> own_ref,
                            std::span<const double> opp_ref, double eta,
                            double sign_eta, const GridTables& grid,
                            PayoffFn&& payoff_at) {
  const int own = static_cast<int>(own_ref.size());
  const int opp = static_cast<int>(opp_ref.size());
  const int K = grid.K;
  const double inf = std::numeric_limits<double>::infinity();

  // opp_tables[b][a][k] = exp(sign_eta * payoff(a, b) * x_k), with the
  // opponent reference folded into the a = 0 slice.
  std::vector<std::vector<std::vector<double>>> opp_tables(opp);
  for (int b = 0; b < opp; ++b) {
    opp_tables[b].assign(own, std::vector<double>(K + 1));
    for (int a = 0; a < own; ++a)
      for (int k = 0; k <= K; ++k) {
        double v = std::exp(sign_eta * payoff_at(a, b) * grid.value[k]);
        if (a == 0) v *= opp_ref[b];
        opp_tables[b][a][k] = v;
      }
  }
  // kl_tables[a][k] = exp(x_k log x_k) * own_ref(a)^(-x_k); +inf marks mass
  // on a zero-reference coordinate.
  std::vector<std::vector<double>> kl_tables(own);
  for (int a = 0; a < own; ++a) {
    kl_tables[a].assign(K + 1, 1.0);
    for (int k = 0; k <= K; ++k) {
      if (own_ref[a] <= 0.0) {
        kl_tables[a][k] = k == 0 ? 1.0 : inf;
      } else {
        kl_tables[a][k] = std::exp(grid.plogp[k]) *
                          std::exp(-grid.value[k] * std::log(own_ref[a]));
      }
    }
  }

  double best = inf;
  int best_i = K, best_j = 0;  // point mass on the first coordinate
  if (own == 1) {
    best_i = K;
  } else if (own == 2) {
    for (int i = 0; i <= K; ++i) {
      const int j = K - i;
      const double klf = kl_tables[0][i] * kl_tables[1][j];
      if (klf == inf) continue;
      double total = 0.0;
      for (int b = 0; b < opp; ++b)
        total += opp_tables[b][0][i] * opp_tables[b][1][j];
      const double candidate = total * klf;
      if (candidate < best) {
        best = candidate;
        best_i = i;
      }
    }
  } else {
    for (int i = 0; i <= K; ++i) {
      if (kl_tables[0][i] == inf) continue;
      for (int j = 0; j + i <= K; ++j) {
        const int k3 = K - i - j;
        const double klf =
            kl_tables[0][i] * kl_tables[1][j] * kl_tables[2][k3];
        if (klf == inf) continue;
        double total = 0.0;
        for (int b = 0; b < opp; ++b)
          total += opp_tables[b][0][i] * opp_tables[b][1][j] *
                   opp_tables[b][2][k3];
        const double candidate = total * klf;
        if (candidate < best) {
          best = candidate;
          best_i = i;
          best_j = j;
        }
      }
    }
  }

  GridOptimum out;
  out.point.assign(own, 0.0);
  if (own == 1) {
    out.point[0] = 1.0;
  } else if (own == 2) {
    out.point[0] = grid.value[best_i];
    out.point[1] = grid.value[K - best_i];
  } else {
    out.point[0] = grid.value[best_i];
    out.point[1] = grid.value[best_j];
    out.point[2] = grid.value[K - best_i - best_j];
  }
  // Exact objective at the argmin, via the numerically stable forms.
  std::vector<double> q(opp);
  for (int b = 0; b < opp; ++b) {
    double v = 0.0;
    for (int a = 0; a < own; ++a) v += out.point[a] * payoff_at(a, b);
    q[b] = v;
  }
  double kl = 0.0;
  for (int a = 0; a < own; ++a)
    if (out.point[a] > 0.0)
      kl += out.point[a] * std::log(out.point[a] / own_ref[a]);
  out.value = (lse_support(opp_ref, q, sign_eta) + kl) / eta;
  return out;
}

}  // namespace

BruteForceStageResult brute_force_stage_ne(const StageGame& sg,
                                           double grid_res) {
  validate_stage_game(sg);
  check_grid_res(grid_res);
  check_oracle_capacity(sg.num_actions_p1);
  check_oracle_capacity(sg.num_actions_p2);

  const double eta = sg.eta;
  const double inv_eta = 1.0 / eta;
  const GridTables grid = make_grid_tables(grid_res);

  // Pass 1: max over player 1's grid of the exact inner minimum
  //   obj(mu) = -eta^{-1} [ log sum_b ref2(b) exp(-eta (Q'mu)(b)) + KL(mu||ref1) ].
  const auto pass1 =
      stage_grid_pass(sg.ref1, sg.ref2, eta, -eta, grid,
                      [&](int a, int b) { return sg.at(a, b); });

  // Pass 2: min over player 2's grid of the exact inner maximum
  //   obj(nu) = eta^{-1} [ log sum_a ref1(a) exp(eta (Q nu)(a)) + KL(nu||ref2) ].
  const auto pass2 =
      stage_grid_pass(sg.ref2, sg.ref1, eta, eta, grid,
                      [&](int b, int a) { return sg.at(a, b); });

  BruteForceStageResult out;
  out.pi1 = pass1.point;
  out.pi2 = pass2.point;
  out.value = -pass1.value;  // pass 1 minimized the negated objective
  out.accuracy = grid_res * (oscillation(sg.payoff) +
                             inv_eta * (1.0 + std::abs(std::log(
                                                  min_positive(sg.ref1)))));
  return out;
}

double brute_force_best_response_value(std::span<const double> q, double eta,
                                       std::span<const double> ref,
                                       double grid_res) {
  if (q.size() != ref.size())
    throw DimensionError("brute_force_best_response_value: length mismatch");
  if (!(eta > 0.0))
    throw DomainError("brute_force_best_response_value: eta <= 0");
  check_grid_res(grid_res);
  check_oracle_capacity(ref.size());
  const GridTables grid = make_grid_tables(grid_res);
  const auto best = grid_search_simplex(
      ref, -1.0 / eta, grid, /*maximize=*/true,
      [&](std::span<const double> pi) {
        double v = 0.0;
        for (std::size_t a = 0; a < pi.size(); ++a) v += pi[a] * q[a];
        return v;
      });
  return best.value;
}

}  // namespace rmg
