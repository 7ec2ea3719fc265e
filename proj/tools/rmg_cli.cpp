// Command-line front end: game generation, dataset sampling, the two
// offline solvers, gap evaluation, rate sweeps, and the verify suite.

#include <charconv>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmg/errors.hpp"
#include "rmg/game_core.hpp"
#include "rmg/harness.hpp"
#include "rmg/io.hpp"
#include "rmg/offline_data.hpp"
#include "rmg/rose.hpp"
#include "rmg/sosmd.hpp"

namespace {

using namespace rmg;

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

struct GlobalArgs {
  std::uint64_t seed = 0;
  std::string out;
  std::string config_path;
  bool strict = true;
};

ExperimentConfig resolve_config(const GlobalArgs& global) {
  ExperimentConfig config =
      global.config_path.empty() ? ExperimentConfig{}
                                 : load_config(global.config_path);
  if (!global.out.empty()) config.out_path = global.out;
  config.strict = global.strict;
  return config;
}

struct SolverArgs {
  std::string game_path;
  std::string data_path;
  std::string refs_path;  // empty selects uniform references
  double eta = 0.5;
  double stage_tol = 1e-10;
};

RegularizationConfig make_cfg(const MarkovGame& game, const SolverArgs& args) {
  RegularizationConfig cfg;
  cfg.eta = args.eta;
  cfg.refs = args.refs_path.empty()
                 ? make_uniform_joint_policy(game.dims())
                 : load_policy(args.refs_path);
  validate_config(cfg, game.dims());
  return cfg;
}

void print_solve_summary(const char* name, const SolveResult& result) {
  long iterations = 0;
  double worst_cert = 0.0;
  for (const StageCertificate& c : result.stage_certificates) {
    iterations += c.iterations;
    worst_cert = std::max(worst_cert, c.exploitability);
  }
  int empty = 0;
  for (const int e : result.empty_cells_per_step) empty += e;
  std::cout << name << ": " << result.stage_certificates.size()
            << " stage solves, " << iterations << " total iterations, worst "
            << "certificate " << format_double(worst_cert)
            << ", empty cells " << empty << "\n";
}

std::string diagnostics_csv(const IterateDiagnostics& diag,
                            const std::string& run_id) {
  std::string out = "run_id,h,t,kl,l1,gamma\n";
  for (const IterateStats& row : diag.rows) {
    out += run_id;
    out += ',' + std::to_string(row.step + 1);
    out += ',' + std::to_string(row.t);
    out += ',' + format_double(row.sup_kl_sum);
    out += ',' + format_double(row.sup_l1);
    out += ',' + format_double(row.gamma);
    out += '\n';
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline KL-regularized zero-sum Markov game solvers"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs global;
  app.add_option("--seed", global.seed, "Master seed");
  app.add_option("--out", global.out, "Output path");
  app.add_option("--config", global.config_path, "Experiment config JSON");
  app.add_flag("--strict,!--no-strict", global.strict,
               "Enforce reward range and noise assumptions (default on)");

  // gen-game
  auto* gen = app.add_subcommand("gen-game", "Generate a random game file");
  GameSpec spec;
  std::string law = "dirichlet";
  gen->add_option("--horizon", spec.horizon);
  gen->add_option("--states", spec.num_states);
  gen->add_option("--a1", spec.num_actions_p1);
  gen->add_option("--a2", spec.num_actions_p2);
  gen->add_option("--transition-law", law)
      ->check(CLI::IsMember({"dirichlet", "deterministic"}));
  gen->add_option("--concentration", spec.dirichlet_concentration);

  // sample
  auto* sample = app.add_subcommand("sample", "Sample an offline dataset");
  std::string sample_game, behavior_kind = "uniform", behavior_file,
              sample_refs_file;
  int sample_n = 1024;
  double sigma = 0.1;
  sample->add_option("--game", sample_game)->required();
  sample->add_option("--n", sample_n);
  sample->add_option("--sigma", sigma);
  sample->add_option("--behavior", behavior_kind)
      ->check(CLI::IsMember({"uniform", "refs", "custom"}));
  sample->add_option("--behavior-file", behavior_file);
  sample->add_option("--refs-file", sample_refs_file);

  // rose / sosmd share solver arguments
  SolverArgs rose_args, sosmd_args;
  auto* rose_cmd =
      app.add_subcommand("rose", "Backward induction with exact stage equilibria");
  rose_cmd->add_option("--game", rose_args.game_path)->required();
  rose_cmd->add_option("--data", rose_args.data_path)->required();
  rose_cmd->add_option("--eta", rose_args.eta);
  rose_cmd->add_option("--refs-file", rose_args.refs_path);
  rose_cmd->add_option("--stage-tol", rose_args.stage_tol);

  auto* sosmd_cmd =
      app.add_subcommand("sosmd", "Backward induction with mirror-descent self-play");
  long rounds = 1024;
  std::string diagnostics_path;
  sosmd_cmd->add_option("--game", sosmd_args.game_path)->required();
  sosmd_cmd->add_option("--data", sosmd_args.data_path)->required();
  sosmd_cmd->add_option("--eta", sosmd_args.eta);
  sosmd_cmd->add_option("--refs-file", sosmd_args.refs_path);
  sosmd_cmd->add_option("--T", rounds, "Self-play rounds per stage");
  sosmd_cmd->add_option("--diagnostics", diagnostics_path,
                        "Per-iteration diagnostics CSV");

  // eval-gap
  auto* eval = app.add_subcommand("eval-gap", "Duality gap of a policy file");
  std::string eval_game, eval_policy, eval_refs;
  double eval_eta = 0.5;
  eval->add_option("--game", eval_game)->required();
  eval->add_option("--policy", eval_policy)->required();
  eval->add_option("--eta", eval_eta);
  eval->add_option("--refs-file", eval_refs);

  // sweeps and verify
  auto* stat = app.add_subcommand("stat-sweep", "Duality gap vs sample size");
  auto* opt = app.add_subcommand("opt-sweep", "Distance to equilibrium vs T");
  auto* verify = app.add_subcommand("verify", "Run every invariant check");
  int stability_trials = 1000;
  bool skip_rate_checks = false;
  verify->add_option("--stability-trials", stability_trials);
  verify->add_flag("--skip-rate-checks", skip_rate_checks,
                   "Skip the slope experiments (faster)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      spec.transition_law = law == "dirichlet" ? TransitionLaw::dirichlet
                                               : TransitionLaw::deterministic;
      const MarkovGame game = generate_random_game(spec, global.seed);
      if (global.out.empty()) throw DomainError("gen-game: --out is required");
      save_game(game, global.out);
      std::cout << "wrote game (" << spec.horizon << " steps, "
                << spec.num_states << " states) to " << global.out << "\n";
      return 0;
    }

    if (sample->parsed()) {
      const MarkovGame game = load_game(sample_game, global.strict);
      JointPolicy refs, custom;
      const JointPolicy* refs_ptr = nullptr;
      const JointPolicy* custom_ptr = nullptr;
      if (!sample_refs_file.empty()) {
        refs = load_policy(sample_refs_file);
        refs_ptr = &refs;
      } else if (behavior_kind == "refs") {
        refs = make_uniform_joint_policy(game.dims());
        refs_ptr = &refs;
      }
      if (!behavior_file.empty()) {
        custom = load_policy(behavior_file);
        custom_ptr = &custom;
      }
      const BehaviorKind kind = behavior_kind == "uniform"
                                    ? BehaviorKind::uniform
                                    : behavior_kind == "refs"
                                          ? BehaviorKind::refs
                                          : BehaviorKind::custom;
      const JointPolicy behavior =
          make_behavior_policy(game.dims(), kind, refs_ptr, custom_ptr);
      const OfflineDataset ds = sample_dataset(game, behavior, sample_n, sigma,
                                               global.seed, global.strict);
      if (global.out.empty()) throw DomainError("sample: --out is required");
      save_dataset(ds, global.out);
      std::cout << "wrote " << ds.records().size() << " records ("
                << ds.num_trajectories() << " trajectories) to " << global.out
                << "\n";
      return 0;
    }

    if (rose_cmd->parsed()) {
      const MarkovGame game = load_game(rose_args.game_path, global.strict);
      const RegularizationConfig cfg = make_cfg(game, rose_args);
      const OfflineDataset ds = load_dataset(rose_args.data_path, game.dims());
      const SolveResult result = rose_solve(ds, game.dims(), cfg,
                                            TabularFitter{},
                                            rose_args.stage_tol);
      print_solve_summary("rose", result);
      std::cout << "duality gap vs game: "
                << format_double(duality_gap(game, result.policy, cfg)) << "\n";
      if (!global.out.empty()) save_policy(result.policy, global.out);
      return 0;
    }

    if (sosmd_cmd->parsed()) {
      const MarkovGame game = load_game(sosmd_args.game_path, global.strict);
      const RegularizationConfig cfg = make_cfg(game, sosmd_args);
      const OfflineDataset ds = load_dataset(sosmd_args.data_path, game.dims());
      SosmdOptions options;
      options.record_diagnostics = !diagnostics_path.empty();
      const auto [result, diag] =
          sosmd_solve(ds, game.dims(), cfg, rounds, TabularFitter{}, options);
      std::cout << "sosmd: " << rounds << " rounds per stage\n";
      std::cout << "duality gap vs game: "
                << format_double(duality_gap(game, result.policy, cfg)) << "\n";
      if (!diagnostics_path.empty())
        write_text_file(diagnostics_path,
                        diagnostics_csv(diag, "sosmd_T" +
                                                  std::to_string(rounds)));
      if (!global.out.empty()) save_policy(result.policy, global.out);
      return 0;
    }

    if (eval->parsed()) {
      const MarkovGame game = load_game(eval_game, global.strict);
      SolverArgs args;
      args.eta = eval_eta;
      args.refs_path = eval_refs;
      const RegularizationConfig cfg = make_cfg(game, args);
      const JointPolicy policy = load_policy(eval_policy);
      const double gap = duality_gap(game, policy, cfg);
      std::cout << "gap " << format_double(gap) << "\n";
      if (!global.out.empty())
        write_text_file(global.out, "{\"gap\": " + format_double(gap) + "}\n");
      return 0;
    }

    if (stat->parsed() || opt->parsed()) {
      ExperimentConfig config = resolve_config(global);
      if (global.seed != 0) config.game_seed = global.seed;
      const auto rows = stat->parsed() ? run_statistical_sweep(config)
                                       : run_optimization_sweep(config);
      if (config.out_path.empty())
        throw DomainError("sweep: --out (or config \"out\") is required");
      save_csv(rows, config.out_path);
      std::cout << "wrote " << rows.size() << " rows to " << config.out_path
                << "\n";
      // Echo the slope summary for quick inspection.
      for (auto it = rows.rbegin(); it != rows.rend(); ++it)
        if (!it->flags.empty() && it->flags.find("slope") != std::string::npos) {
          std::cout << it->run_id << ": " << it->flags << "\n";
          break;
        }
      return 0;
    }

    if (verify->parsed()) {
      ExperimentConfig config = resolve_config(global);
      if (global.seed != 0) config.game_seed = global.seed;
      VerifyOptions options;
      options.stability_trials = stability_trials;
      options.include_rate_checks = !skip_rate_checks;
      const auto report = verify_suite(config, options);
      int failures = 0;
      for (const VerifyEntry& e : report) {
        std::cout << (e.status == "pass"
                          ? "[PASS] "
                          : e.status == "skipped" ? "[SKIP] " : "[FAIL] ")
                  << e.check << " (margin " << format_double(e.margin) << ") "
                  << e.details << "\n";
        if (e.status == "fail") ++failures;
      }
      if (!config.out_path.empty()) save_verify_report(report, config.out_path);
      std::cout << (failures == 0 ? "all checks passed"
                                  : std::to_string(failures) +
                                        " check(s) failed")
                << "\n";
      return failures == 0 ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
