#pragma once

// Internal helpers shared by the rose and sosmd translation units.

#include <cstdint>
#include <span>
#include <vector>

#include "rmg/offline_data.hpp"
#include "rmg/rose.hpp"
#include "rmg/stage_solver.hpp"

namespace rmg::detail {

SolveResult make_empty_result(const GameDims& dims);

StageGame make_stage_game(const QTable& q, int s,
                          const RegularizationConfig& cfg, int h);

// Fits one step's Q table per the fitter spec; tabular coverage goes into
// the out-params when non-null.
QTable fit_step_q(const FitterSpec& fitter, const OfflineDataset& dataset,
                  const GameDims& dims, int h, std::span<const double> v_next,
                  std::vector<std::uint8_t>* coverage, int* empty_cells);

}  // namespace rmg::detail
