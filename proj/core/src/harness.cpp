#include "rmg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "rmg/errors.hpp"
#include "rmg/game_core.hpp"
#include "rmg/oracle.hpp"
#include "rmg/rng.hpp"
#include "rmg/rose.hpp"
#include "rmg/sosmd.hpp"

namespace rmg {

MarkovGame generate_random_game(const GameSpec& spec, std::uint64_t seed) {
  if (spec.horizon < 1 || spec.num_states < 1 || spec.num_actions_p1 < 1 ||
      spec.num_actions_p2 < 1)
    throw DomainError("generate_random_game: dimensions must be positive");

  MarkovGame game;
  game.horizon = spec.horizon;
  game.num_states = spec.num_states;
  game.num_actions_p1 = spec.num_actions_p1;
  game.num_actions_p2 = spec.num_actions_p2;
  const std::size_t cells = static_cast<std::size_t>(spec.horizon) *
                            spec.num_states * spec.num_actions_p1 *
                            spec.num_actions_p2;
  game.rewards.resize(cells);
  game.transitions.assign(cells * spec.num_states, 0.0);
  game.initial_dist.resize(spec.num_states);

  RandomStream rewards_stream(seed, "game-rewards");
  for (double& r : game.rewards) r = rewards_stream.next_double();

  RandomStream transitions_stream(seed, "game-transitions");
  for (int h = 0; h < spec.horizon; ++h)
    for (int s = 0; s < spec.num_states; ++s)
      for (int a1 = 0; a1 < spec.num_actions_p1; ++a1)
        for (int a2 = 0; a2 < spec.num_actions_p2; ++a2) {
          auto row = game.transition_row(h, s, a1, a2);
          if (spec.transition_law == TransitionLaw::deterministic) {
            const int target = static_cast<int>(transitions_stream.next_u64() %
                                                static_cast<unsigned>(
                                                    spec.num_states));
            row[target] = 1.0;
          } else {
            transitions_stream.fill_dirichlet(row,
                                              spec.dirichlet_concentration);
          }
        }

  RandomStream rho_stream(seed, "game-initial");
  rho_stream.fill_dirichlet(game.initial_dist, 1.0);
  return game;
}

JointPolicy make_reference_policies(const GameDims& dims, const RefsSpec& spec,
                                    std::uint64_t seed) {
  if (spec.kind == RefsKind::uniform) return make_uniform_joint_policy(dims);
  JointPolicy refs;
  refs.p1 = PolicyTable(dims.horizon, dims.num_states, dims.num_actions_p1);
  refs.p2 = PolicyTable(dims.horizon, dims.num_states, dims.num_actions_p2);
  RandomStream stream(seed, "refs");
  for (int h = 0; h < dims.horizon; ++h)
    for (int s = 0; s < dims.num_states; ++s) {
      stream.fill_dirichlet(refs.p1.dist(h, s), spec.concentration);
      stream.fill_dirichlet(refs.p2.dist(h, s), spec.concentration);
    }
  return refs;
}

void validate_experiment_config(const ExperimentConfig& config) {
  if (config.seeds.empty())
    throw DomainError("experiment config: empty seeds list");
  std::vector<std::uint64_t> sorted = config.seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DomainError("experiment config: seeds must be distinct");
  const auto check_grid = [](const std::vector<long>& grid, const char* name) {
    if (grid.empty())
      throw DomainError(std::string("experiment config: empty ") + name);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      if (grid[i] >= grid[i + 1])
        throw DomainError(std::string("experiment config: ") + name +
                          " must be strictly increasing");
    if (grid.front() < 1)
      throw DomainError(std::string("experiment config: ") + name +
                        " entries must be positive");
  };
  check_grid(config.n_grid, "n_grid");
  check_grid(config.t_grid, "t_grid");
  if (!(config.eta > 0.0)) throw DomainError("experiment config: eta <= 0");
  if (config.noise_sigma < 0.0)
    throw DomainError("experiment config: negative noise_sigma");
  if (config.fitter != "tabular")
    throw DomainError("experiment config: sweeps support the tabular fitter");
  if (!(config.stage_tol > 0.0))
    throw DomainError("experiment config: stage_tol <= 0");
}

namespace {

// Per-sweep-seed derived streams: the game and the dataset vary per seed so
// medians average over instances, not just noise realizations.
std::uint64_t derived_seed(std::uint64_t game_seed, std::string_view purpose,
                           std::uint64_t sweep_seed) {
  return splitmix64(splitmix64(game_seed) ^ fnv1a64(purpose) ^
                    splitmix64(~sweep_seed));
}

struct Instance {
  MarkovGame game;
  RegularizationConfig cfg;
  JointPolicy behavior;
};

Instance make_instance(const ExperimentConfig& config,
                       std::uint64_t sweep_seed) {
  Instance inst;
  inst.game = generate_random_game(
      config.game, derived_seed(config.game_seed, "game", sweep_seed));
  inst.cfg.eta = config.eta;
  inst.cfg.refs = make_reference_policies(
      inst.game.dims(), config.refs,
      derived_seed(config.game_seed, "refs", sweep_seed));
  const JointPolicy* refs = &inst.cfg.refs;
  inst.behavior = make_behavior_policy(inst.game.dims(), config.behavior, refs,
                                       /*custom=*/nullptr);
  return inst;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m]
                                : 0.5 * (values[m - 1] + values[m]);
}

SweepRow base_row(const ExperimentConfig& config) {
  SweepRow row;
  row.eta = config.eta;
  row.horizon = config.game.horizon;
  row.num_states = config.game.num_states;
  row.num_actions_p1 = config.game.num_actions_p1;
  row.num_actions_p2 = config.game.num_actions_p2;
  row.sigma = config.noise_sigma;
  return row;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

std::string slope_flags(const SlopeFit& fit) {
  return "slope=" + std::to_string(fit.slope) +
         ";r2=" + std::to_string(fit.r2);
}

// Largest per-player L1 / summed KL distance over all (h, s) between a
// policy pair and a reference pair.
struct SupDistances {
  double l1 = 0.0;
  double kl = 0.0;
};

SupDistances sup_state_distances(const JointPolicy& reference,
                                 const JointPolicy& policy) {
  SupDistances out;
  const PolicyTable* refs[2] = {&reference.p1, &reference.p2};
  const PolicyTable* pols[2] = {&policy.p1, &policy.p2};
  for (int h = 0; h < reference.p1.horizon(); ++h)
    for (int s = 0; s < reference.p1.num_states(); ++s) {
      double kl_sum = 0.0;
      for (int player = 0; player < 2; ++player) {
        const auto ref_dist = refs[player]->dist(h, s);
        const auto pol_dist = pols[player]->dist(h, s);
        double l1 = 0.0;
        for (std::size_t a = 0; a < ref_dist.size(); ++a)
          l1 += std::abs(ref_dist[a] - pol_dist[a]);
        out.l1 = std::max(out.l1, l1);
        kl_sum += kl_divergence(ref_dist, pol_dist);
      }
      out.kl = std::max(out.kl, kl_sum);
    }
  return out;
}

}  // namespace

std::vector<SweepRow> run_statistical_sweep(const ExperimentConfig& config) {
  validate_experiment_config(config);
  std::vector<SweepRow> rows;
  std::vector<std::pair<double, double>> slope_points;

  for (const long n : config.n_grid) {
    std::vector<double> gaps;
    for (const std::uint64_t seed : config.seeds) {
      const auto start = std::chrono::steady_clock::now();
      SweepRow row = base_row(config);
      row.run_id = "stat_seed" + std::to_string(seed) + "_n" +
                   std::to_string(n);
      row.seed = seed;
      row.n = n;
      try {
        const Instance inst = make_instance(config, seed);
        const OfflineDataset dataset = sample_dataset(
            inst.game, inst.behavior, static_cast<int>(n), config.noise_sigma,
            derived_seed(config.game_seed, "data", seed), config.strict);
        const SolveResult solved =
            rose_solve(dataset, inst.game.dims(), inst.cfg, TabularFitter{},
                       config.stage_tol);
        row.gap = duality_gap(inst.game, solved.policy, inst.cfg);
        gaps.push_back(*row.gap);
        if (config.sosmd_fixed_t > 0) {
          const auto [sos, diag] =
              sosmd_solve(dataset, inst.game.dims(), inst.cfg,
                          config.sosmd_fixed_t, TabularFitter{});
          SweepRow sos_row = row;
          sos_row.run_id = "stat_sosmd_seed" + std::to_string(seed) + "_n" +
                           std::to_string(n);
          sos_row.t = config.sosmd_fixed_t;
          sos_row.gap = duality_gap(inst.game, sos.policy, inst.cfg);
          sos_row.wallclock_ms = elapsed_ms(start);
          rows.push_back(std::move(sos_row));
        }
      } catch (const Error& e) {
        row.flags = std::string("error:") + e.what();
      }
      row.wallclock_ms = elapsed_ms(start);
      rows.push_back(std::move(row));
    }
    if (!gaps.empty()) {
      SweepRow summary = base_row(config);
      summary.run_id = "stat_median_n" + std::to_string(n);
      summary.n = n;
      summary.gap = median(gaps);
      summary.flags = "median";
      slope_points.emplace_back(static_cast<double>(n),
                                std::max(*summary.gap, 1e-300));
      rows.push_back(std::move(summary));
    }
  }

  SweepRow slope_row = base_row(config);
  slope_row.run_id = "stat_slope";
  if (slope_points.size() >= 3) {
    const SlopeFit fit = fit_loglog_slope(slope_points);
    slope_row.flags = slope_flags(fit);
  } else {
    slope_row.flags = "slope_skipped_degenerate_grid";
  }
  rows.push_back(std::move(slope_row));
  return rows;
}

std::vector<SweepRow> run_optimization_sweep(const ExperimentConfig& config) {
  validate_experiment_config(config);
  std::vector<SweepRow> rows;
  const long n = config.n_grid.back();

  std::vector<std::vector<double>> sup_l1_by_t(config.t_grid.size());
  std::vector<std::vector<double>> sup_kl_by_t(config.t_grid.size());
  for (const std::uint64_t seed : config.seeds) {
    Instance inst;
    OfflineDataset dataset;
    SolveResult reference;
    bool instance_ok = true;
    std::string instance_error;
    try {
      inst = make_instance(config, seed);
      dataset = sample_dataset(inst.game, inst.behavior, static_cast<int>(n),
                               config.noise_sigma,
                               derived_seed(config.game_seed, "data", seed),
                               config.strict);
      reference = rose_solve(dataset, inst.game.dims(), inst.cfg,
                             TabularFitter{}, config.stage_tol);
    } catch (const Error& e) {
      instance_ok = false;
      instance_error = e.what();
    }

    for (std::size_t ti = 0; ti < config.t_grid.size(); ++ti) {
      const long t = config.t_grid[ti];
      const auto start = std::chrono::steady_clock::now();
      SweepRow row = base_row(config);
      row.run_id =
          "opt_seed" + std::to_string(seed) + "_T" + std::to_string(t);
      row.seed = seed;
      row.n = n;
      row.t = t;
      if (!instance_ok) {
        row.flags = "error:" + instance_error;
        rows.push_back(std::move(row));
        continue;
      }
      try {
        const auto [sos, diag] = sosmd_solve(dataset, inst.game.dims(),
                                             inst.cfg, t, TabularFitter{});
        const SupDistances d =
            sup_state_distances(reference.policy, sos.policy);
        row.sup_l1 = d.l1;
        row.sup_kl = d.kl;
        sup_l1_by_t[ti].push_back(d.l1);
        sup_kl_by_t[ti].push_back(d.kl);
      } catch (const Error& e) {
        row.flags = std::string("error:") + e.what();
      }
      row.wallclock_ms = elapsed_ms(start);
      rows.push_back(std::move(row));
    }
  }

  std::vector<std::pair<double, double>> slope_points;
  for (std::size_t ti = 0; ti < config.t_grid.size(); ++ti) {
    if (sup_l1_by_t[ti].empty()) continue;
    SweepRow summary = base_row(config);
    summary.run_id = "opt_median_T" + std::to_string(config.t_grid[ti]);
    summary.t = config.t_grid[ti];
    summary.n = n;
    summary.sup_l1 = median(sup_l1_by_t[ti]);
    summary.sup_kl = median(sup_kl_by_t[ti]);
    summary.flags = "median";
    slope_points.emplace_back(static_cast<double>(config.t_grid[ti]),
                              std::max(*summary.sup_l1, 1e-300));
    rows.push_back(std::move(summary));
  }

  SweepRow slope_row = base_row(config);
  slope_row.run_id = "opt_slope";
  if (slope_points.size() >= 3) {
    const SlopeFit fit = fit_loglog_slope(slope_points);
    slope_row.flags = slope_flags(fit);
  } else {
    slope_row.flags = "slope_skipped_degenerate_grid";
  }
  rows.push_back(std::move(slope_row));
  return rows;
}

SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3)
    throw DomainError("fit_loglog_slope: need at least 3 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0))
      throw DomainError("fit_loglog_slope: coordinates must be positive");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    const double dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0)
    throw DomainError("fit_loglog_slope: degenerate x coordinates");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = syy - fit.slope * sxy;
  fit.r2 = syy > 1e-30 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

bool all_checks_passed(const std::vector<VerifyEntry>& report) {
  return std::all_of(report.begin(), report.end(), [](const VerifyEntry& e) {
    return e.status != "fail";
  });
}

}  // namespace rmg
