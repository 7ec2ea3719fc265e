#include "rmg/rose.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "rmg/errors.hpp"
#include "solve_common.hpp"

namespace rmg {

namespace detail {

StageGame make_stage_game(const QTable& q, int s,
                          const RegularizationConfig& cfg, int h) {
  StageGame sg;
  sg.num_actions_p1 = q.num_actions_p1();
  sg.num_actions_p2 = q.num_actions_p2();
  const auto block = q.state_block(s);
  sg.payoff.assign(block.begin(), block.end());
  sg.eta = cfg.eta;
  const auto r1 = cfg.refs.p1.dist(h, s);
  const auto r2 = cfg.refs.p2.dist(h, s);
  sg.ref1.assign(r1.begin(), r1.end());
  sg.ref2.assign(r2.begin(), r2.end());
  return sg;
}

QTable fit_step_q(const FitterSpec& fitter, const OfflineDataset& dataset,
                  const GameDims& dims, int h, std::span<const double> v_next,
                  std::vector<std::uint8_t>* coverage, int* empty_cells) {
  if (std::holds_alternative<TabularFitter>(fitter)) {
    TabularFit fit = fit_q_tabular(dataset.step_records(h), v_next, dims);
    if (coverage != nullptr) *coverage = std::move(fit.visited);
    if (empty_cells != nullptr) *empty_cells = fit.empty_cells;
    return std::move(fit.q);
  }
  if (const auto* finite = std::get_if<FiniteClassFitter>(&fitter)) {
    if (finite->classes.empty())
      throw DomainError("finite-class fitter with no classes");
    if (finite->classes.size() != 1 &&
        finite->classes.size() != static_cast<std::size_t>(dims.horizon))
      throw DimensionError(
          "finite-class fitter needs 1 class or one per step");
    const FunctionClass& fc =
        finite->classes.size() == 1 ? finite->classes[0] : finite->classes[h];
    return fit_q_finite_class(dataset.step_records(h), v_next, fc).first;
  }
  const auto& fixed = std::get<FixedQFitter>(fitter);
  if (fixed.tables.size() != static_cast<std::size_t>(dims.horizon))
    throw DimensionError("fixed-Q fitter needs one table per step");
  return fixed.tables[h];
}

SolveResult make_empty_result(const GameDims& dims) {
  SolveResult result;
  result.policy.p1 =
      PolicyTable(dims.horizon, dims.num_states, dims.num_actions_p1);
  result.policy.p2 =
      PolicyTable(dims.horizon, dims.num_states, dims.num_actions_p2);
  result.q_hat.resize(dims.horizon);
  result.v_hat = ValueTable(dims.horizon, dims.num_states);
  result.coverage.resize(dims.horizon);
  result.empty_cells_per_step.assign(dims.horizon, 0);
  return result;
}

}  // namespace detail

namespace {

// Runs the per-state stage equilibria for one step given its fitted Q table.
void solve_step_states(const QTable& q, int h, const GameDims& dims,
                       const RegularizationConfig& cfg, double stage_tol,
                       SolveResult& result) {
  for (int s = 0; s < dims.num_states; ++s) {
    const StageGame sg = detail::make_stage_game(q, s, cfg, h);
    StageSolution sol;
    try {
      sol = solve_stage_equilibrium(sg, stage_tol);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("stage equilibrium failed at (h=" +
                                 std::to_string(h + 1) +
                                 ", s=" + std::to_string(s) + "): " + e.what(),
                             e.last_exploitability());
    }
    auto p1 = result.policy.p1.dist(h, s);
    auto p2 = result.policy.p2.dist(h, s);
    std::copy(sol.pi1.begin(), sol.pi1.end(), p1.begin());
    std::copy(sol.pi2.begin(), sol.pi2.end(), p2.begin());
    result.v_hat.at(h, s) = sol.value;
    result.stage_certificates.push_back(
        {h, s, sol.iterations, sol.exploitability});
  }
}

}  // namespace

SolveResult rose_solve(const OfflineDataset& dataset, const GameDims& dims,
                       const RegularizationConfig& cfg, const FitterSpec& fitter,
                       double stage_tol) {
  if (dataset.dims() != dims)
    throw DimensionError("rose_solve: dataset dimensions mismatch");
  validate_config(cfg, dims);

  SolveResult result = detail::make_empty_result(dims);
  for (int h = dims.horizon - 1; h >= 0; --h) {
    const auto v_next = result.v_hat.row(h + 1);
    try {
      result.q_hat[h] =
          detail::fit_step_q(fitter, dataset, dims, h, v_next,
                             &result.coverage[h],
                             &result.empty_cells_per_step[h]);
    } catch (const DimensionError& e) {
      throw DimensionError("rose_solve: fitter failed at step h=" +
                           std::to_string(h + 1) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("rose_solve: fitter failed at step h=" +
                        std::to_string(h + 1) + ": " + e.what());
    }
    solve_step_states(result.q_hat[h], h, dims, cfg, stage_tol, result);
  }
  return result;
}

SolveResult solve_exact(const MarkovGame& game, const RegularizationConfig& cfg,
                        double stage_tol) {
  const GameDims dims = game.dims();
  validate_config(cfg, dims);

  SolveResult result = detail::make_empty_result(dims);
  for (int h = dims.horizon - 1; h >= 0; --h) {
    const auto v_next = result.v_hat.row(h + 1);
    QTable q(dims.num_states, dims.num_actions_p1, dims.num_actions_p2);
    for (int s = 0; s < dims.num_states; ++s)
      for (int a1 = 0; a1 < dims.num_actions_p1; ++a1)
        for (int a2 = 0; a2 < dims.num_actions_p2; ++a2) {
          const auto row = game.transition_row(h, s, a1, a2);
          double next = 0.0;
          for (int sn = 0; sn < dims.num_states; ++sn)
            next += row[sn] * v_next[sn];
          q.at(s, a1, a2) = game.reward(h, s, a1, a2) + next;
        }
    result.q_hat[h] = std::move(q);
    solve_step_states(result.q_hat[h], h, dims, cfg, stage_tol, result);
  }
  return result;
}

}  // namespace rmg
