#include <benchmark/benchmark.h>

#include "rmg/game_core.hpp"
#include "rmg/harness.hpp"
#include "rmg/offline_data.hpp"
#include "rmg/oracle.hpp"
#include "rmg/rng.hpp"
#include "rmg/rose.hpp"
#include "rmg/sosmd.hpp"
#include "rmg/stage_solver.hpp"

namespace {

using namespace rmg;

StageGame random_stage(int actions, double eta, std::uint64_t seed) {
  StageGame sg;
  sg.num_actions_p1 = sg.num_actions_p2 = actions;
  sg.eta = eta;
  RandomStream stream(seed, "bench-stage");
  for (int c = 0; c < actions * actions; ++c)
    sg.payoff.push_back(stream.next_double());
  sg.ref1.assign(actions, 1.0 / actions);
  sg.ref2.assign(actions, 1.0 / actions);
  return sg;
}

void BM_StageSolve(benchmark::State& state) {
  const StageGame sg = random_stage(static_cast<int>(state.range(0)),
                                    state.range(1) / 10.0, 17);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_stage_equilibrium(sg, 1e-10));
}
BENCHMARK(BM_StageSolve)
    ->Args({2, 5})
    ->Args({2, 10})
    ->Args({3, 5})
    ->Args({3, 50});

void BM_StageExploitability(benchmark::State& state) {
  const StageGame sg = random_stage(3, 0.5, 23);
  const std::vector<double> uniform(3, 1.0 / 3.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(stage_exploitability(sg, uniform, uniform));
}
BENCHMARK(BM_StageExploitability);

void BM_BruteForceStage3x3(benchmark::State& state) {
  const StageGame sg = random_stage(3, 1.0, 29);
  const double grid_res = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(brute_force_stage_ne(sg, grid_res));
}
BENCHMARK(BM_BruteForceStage3x3)->Arg(1000)->Arg(10000)
    ->Unit(benchmark::kMillisecond);

void BM_BestResponseBackward(benchmark::State& state) {
  GameSpec spec;  // desk scale: 3 steps, 5 states, 2x2 actions
  const MarkovGame game = generate_random_game(spec, 31);
  RegularizationConfig cfg{0.5, make_uniform_joint_policy(game.dims())};
  const JointPolicy opponent = make_uniform_joint_policy(game.dims());
  for (auto _ : state)
    benchmark::DoNotOptimize(
        best_response_values(game, opponent, PlayerId::one, cfg));
}
BENCHMARK(BM_BestResponseBackward);

void BM_SampleDataset(benchmark::State& state) {
  GameSpec spec;
  const MarkovGame game = generate_random_game(spec, 37);
  const JointPolicy behavior =
      make_behavior_policy(game.dims(), BehaviorKind::uniform);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_dataset(game, behavior, n, 0.1, 41));
  state.SetItemsProcessed(state.iterations() * n * game.horizon);
}
BENCHMARK(BM_SampleDataset)->Arg(1024)->Arg(16384);

void BM_RoseSolve(benchmark::State& state) {
  GameSpec spec;
  const MarkovGame game = generate_random_game(spec, 43);
  RegularizationConfig cfg{0.5, make_uniform_joint_policy(game.dims())};
  const JointPolicy behavior =
      make_behavior_policy(game.dims(), BehaviorKind::uniform);
  const OfflineDataset ds = sample_dataset(game, behavior, 4096, 0.1, 47);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        rose_solve(ds, game.dims(), cfg, TabularFitter{}));
}
BENCHMARK(BM_RoseSolve)->Unit(benchmark::kMillisecond);

void BM_SosmdRounds(benchmark::State& state) {
  GameSpec spec;
  const MarkovGame game = generate_random_game(spec, 53);
  RegularizationConfig cfg{0.5, make_uniform_joint_policy(game.dims())};
  const JointPolicy behavior =
      make_behavior_policy(game.dims(), BehaviorKind::uniform);
  const OfflineDataset ds = sample_dataset(game, behavior, 2048, 0.1, 59);
  const long rounds = state.range(0);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        sosmd_solve(ds, game.dims(), cfg, rounds, TabularFitter{}));
  state.SetItemsProcessed(state.iterations() * rounds * game.horizon *
                          game.num_states);
}
BENCHMARK(BM_SosmdRounds)->Arg(1024)->Arg(16384)
    ->Unit(benchmark::kMillisecond);

void BM_PhiloxU64(benchmark::State& state) {
  RandomStream stream(61, "bench-philox");
  for (auto _ : state) benchmark::DoNotOptimize(stream.next_u64());
}
BENCHMARK(BM_PhiloxU64);

}  // namespace

BENCHMARK_MAIN();
