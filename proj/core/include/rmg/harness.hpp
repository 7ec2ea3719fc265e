#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rmg/offline_data.hpp"
#include "rmg/types.hpp"

namespace rmg {

enum class TransitionLaw { dirichlet, deterministic };

struct GameSpec {
  int horizon = 3;
  int num_states = 5;
  int num_actions_p1 = 2;
  int num_actions_p2 = 2;
  TransitionLaw transition_law = TransitionLaw::dirichlet;
  double dirichlet_concentration = 1.0;
};

// Rewards i.i.d. uniform on [0,1]; transition rows symmetric Dirichlet (or
// seeded point masses under the deterministic law); initial distribution
// Dirichlet(1). Deterministic per seed.
MarkovGame generate_random_game(const GameSpec& spec, std::uint64_t seed);

enum class RefsKind { uniform, dirichlet };

struct RefsSpec {
  RefsKind kind = RefsKind::uniform;
  double concentration = 1.0;
};

JointPolicy make_reference_policies(const GameDims& dims, const RefsSpec& spec,
                                    std::uint64_t seed);

struct ExperimentConfig {
  GameSpec game;
  std::uint64_t game_seed = 1;
  double eta = 0.5;
  RefsSpec refs;
  BehaviorKind behavior = BehaviorKind::uniform;
  double noise_sigma = 0.1;
  std::vector<long> n_grid = {128, 256, 512, 1024, 2048, 4096, 8192, 16384};
  std::vector<long> t_grid = {16,   32,   64,   128,  256,  512,
                              1024, 2048, 4096, 8192, 16384};
  std::vector<std::uint64_t> seeds = {1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                                      11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  std::string fitter = "tabular";
  double stage_tol = 1e-10;
  // Statistical sweep: when positive, also run the self-play solver at this
  // fixed round count and report its gap alongside.
  long sosmd_fixed_t = 0;
  bool strict = true;
  std::string out_path;
};

void validate_experiment_config(const ExperimentConfig& config);

// One CSV row; the column set is fixed:
//   run_id, seed, n, T, eta, H, S, A1, A2, sigma, gap, sup_l1, sup_kl,
//   wallclock_ms, flags
// Missing metrics serialize as empty fields.
struct SweepRow {
  std::string run_id;
  std::optional<std::uint64_t> seed;
  std::optional<long> n;
  std::optional<long> t;
  double eta = 0.0;
  int horizon = 0;
  int num_states = 0;
  int num_actions_p1 = 0;
  int num_actions_p2 = 0;
  double sigma = 0.0;
  std::optional<double> gap;
  std::optional<double> sup_l1;
  std::optional<double> sup_kl;
  std::optional<double> wallclock_ms;
  std::string flags;
};

// For each (seed, n): sample a dataset, solve, evaluate the duality gap
// against the true game; one row per run plus a median summary row per n and
// a final slope row.
std::vector<SweepRow> run_statistical_sweep(const ExperimentConfig& config);

// Fixes one dataset per seed (n = max of n_grid), solves the reference
// equilibrium once, then runs the self-play solver at every T in t_grid and
// records sup-state distances to the reference.
std::vector<SweepRow> run_optimization_sweep(const ExperimentConfig& config);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares on (log x, log y); >= 3 strictly positive points.
SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points);

struct VerifyEntry {
  std::string check;
  std::string status;  // "pass" | "fail" | "skipped"
  double margin = 0.0; // worst-case slack (negative = violation amount)
  std::string details;
};

struct VerifyOptions {
  // Deliberately corrupts one transition row of the first instance before
  // validation, to exercise the fault path.
  bool corrupt_transition_row = false;
  // Run the heavier rate experiments (statistical and optimization slopes).
  bool include_rate_checks = true;
  int stability_trials = 1000;
};

// Executes every module invariant and convergence-bound check on a seeded
// suite derived from `config`; failures are report entries, not exceptions.
std::vector<VerifyEntry> verify_suite(const ExperimentConfig& config,
                                      const VerifyOptions& options = {});

bool all_checks_passed(const std::vector<VerifyEntry>& report);

}  // namespace rmg
