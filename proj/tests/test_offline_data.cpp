#include <doctest.h>

#include <cmath>
#include <vector>

#include "rmg/errors.hpp"
#include "rmg/game_core.hpp"
#include "rmg/harness.hpp"
#include "rmg/io.hpp"
#include "rmg/offline_data.hpp"
#include "rmg/rng.hpp"

using namespace rmg;

TEST_SUITE_BEGIN("offline_data");

namespace {

MarkovGame small_game(std::uint64_t seed, int horizon = 3, int states = 2) {
  GameSpec spec;
  spec.horizon = horizon;
  spec.num_states = states;
  return generate_random_game(spec, seed);
}

QTable constant_table(const GameDims& dims, double value) {
  return QTable(dims.num_states, dims.num_actions_p1, dims.num_actions_p2,
                value);
}

}  // namespace

TEST_CASE("make_behavior_policy kinds") {
  const GameDims dims{2, 3, 2, 2};
  const JointPolicy uniform = make_behavior_policy(dims, BehaviorKind::uniform);
  CHECK(uniform.p1.dist(0, 0)[0] == 0.5);
  CHECK(uniform.p2.dist(1, 2)[1] == 0.5);

  JointPolicy refs = make_uniform_joint_policy(dims);
  refs.p1.dist(0, 0)[0] = 0.8;
  refs.p1.dist(0, 0)[1] = 0.2;
  const JointPolicy copied =
      make_behavior_policy(dims, BehaviorKind::refs, &refs);
  CHECK(copied.p1.dist(0, 0)[0] == 0.8);

  const JointPolicy custom =
      make_behavior_policy(dims, BehaviorKind::custom, nullptr, &refs);
  CHECK(custom.p1.dist(0, 0)[0] == 0.8);

  CHECK_THROWS_AS(make_behavior_policy(dims, BehaviorKind::custom),
                  DomainError);
  JointPolicy wrong = make_uniform_joint_policy({2, 3, 3, 2});
  CHECK_THROWS_AS(
      make_behavior_policy(dims, BehaviorKind::custom, nullptr, &wrong),
      DimensionError);
}

TEST_CASE("sample_dataset cardinality, noiseless rewards, determinism") {
  const MarkovGame game = small_game(5);
  const JointPolicy behavior =
      make_behavior_policy(game.dims(), BehaviorKind::uniform);

  const OfflineDataset ds = sample_dataset(game, behavior, 10, 0.0, 123);
  CHECK(ds.records().size() == 30);  // n = 10, H = 3
  CHECK(ds.num_trajectories() == 10);
  for (int h = 0; h < 3; ++h) CHECK(ds.step_records(h).size() == 10);

  // Zero noise reproduces the deterministic rewards exactly.
  for (const Transition& r : ds.records())
    CHECK(r.reward == game.reward(r.step, r.s, r.a1, r.a2));

  // Same seed: byte-identical records; different seed: different records.
  const OfflineDataset again = sample_dataset(game, behavior, 10, 0.0, 123);
  CHECK(again.records() == ds.records());
  CHECK(dataset_to_jsonl(again) == dataset_to_jsonl(ds));
  const OfflineDataset other = sample_dataset(game, behavior, 10, 0.0, 124);
  CHECK(other.records() != ds.records());

  CHECK_THROWS_AS(sample_dataset(game, behavior, 0, 0.1, 1), DomainError);
  CHECK_THROWS_AS(sample_dataset(game, behavior, 5, 1.5, 1), DomainError);
  CHECK_NOTHROW(sample_dataset(game, behavior, 5, 1.5, 1, /*strict=*/false));
}

TEST_CASE("trajectories follow the game dynamics") {
  const MarkovGame game = small_game(9, 4, 3);
  const JointPolicy behavior =
      make_behavior_policy(game.dims(), BehaviorKind::uniform);
  const OfflineDataset ds = sample_dataset(game, behavior, 50, 0.1, 7);
  // Consecutive records of one trajectory chain s_next -> s.
  for (int traj = 0; traj < 50; ++traj)
    for (int h = 0; h + 1 < 4; ++h) {
      const Transition& cur = ds.step_records(h)[traj];
      const Transition& nxt = ds.step_records(h + 1)[traj];
      CHECK(cur.traj == traj);
      CHECK(cur.s_next == nxt.s);
      // Transitions only land on states the row supports.
      CHECK(game.transition_row(h, cur.s, cur.a1, cur.a2)[cur.s_next] > 0.0);
    }
}

TEST_CASE("fit_q_tabular: exact on noiseless data, means, coverage mask") {
  const MarkovGame game = small_game(11, 1, 2);
  const GameDims dims = game.dims();
  const std::vector<double> v_zero(dims.num_states, 0.0);

  // Noiseless data with full coverage recovers the rewards exactly.
  const JointPolicy behavior = make_behavior_policy(dims, BehaviorKind::uniform);
  const OfflineDataset ds = sample_dataset(game, behavior, 400, 0.0, 21);
  const TabularFit fit = fit_q_tabular(ds.step_records(0), v_zero, dims);
  REQUIRE(fit.empty_cells == 0);
  for (int s = 0; s < dims.num_states; ++s)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2)
        CHECK(fit.q.at(s, a1, a2) ==
              doctest::Approx(game.reward(0, s, a1, a2)));

  // Two records in one cell average; untouched cells report in the mask.
  std::vector<Transition> records = {{0, 0, 0, 0, 0, 0.4, 0},
                                     {1, 0, 0, 0, 0, 0.6, 1}};
  const TabularFit two = fit_q_tabular(records, v_zero, dims);
  CHECK(two.q.at(0, 0, 0) == doctest::Approx(0.5));
  CHECK(two.q.at(1, 1, 1) == 0.0);
  CHECK(two.empty_cells == 7);
  CHECK(two.visited[0] == 1);
  CHECK(two.visited[1] == 0);
}

TEST_CASE("per-cell mean minimizes the squared loss (golden-section check)") {
  const GameDims dims{1, 1, 1, 1};
  std::vector<Transition> records;
  RandomStream stream(77, "golden");
  for (int i = 0; i < 9; ++i)
    records.push_back({i, 0, 0, 0, 0, stream.next_double(), 0});
  const std::vector<double> v_zero = {0.0};
  const TabularFit fit = fit_q_tabular(records, v_zero, dims);

  const auto loss = [&](double c) {
    double total = 0.0;
    for (const Transition& r : records)
      total += (c - r.reward) * (c - r.reward);
    return total;
  };
  // Golden-section search over [-1, 2]. A quadratic minimum can only be
  // localized to about sqrt(machine epsilon), so compare argmins at 1e-7 and
  // use first-order optimality (exact for the mean) at full precision.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -1.0, hi = 2.0;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  while (hi - lo > 1e-12) {
    if (loss(x1) < loss(x2)) {
      hi = x2;
      x2 = x1;
      x1 = hi - phi * (hi - lo);
    } else {
      lo = x1;
      x1 = x2;
      x2 = lo + phi * (hi - lo);
    }
  }
  const double mean = fit.q.at(0, 0, 0);
  CHECK(mean == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-7));
  CHECK(loss(mean) <= loss(0.5 * (lo + hi)) + 1e-15);
  double gradient = 0.0;
  for (const Transition& r : records) gradient += mean - r.reward;
  CHECK(std::abs(gradient) <= 1e-12);
}

TEST_CASE("fit_q_finite_class selection and ties") {
  const MarkovGame game = small_game(13, 1, 2);
  const GameDims dims = game.dims();
  const std::vector<double> v_zero(dims.num_states, 0.0);
  const JointPolicy behavior = make_behavior_policy(dims, BehaviorKind::uniform);
  const OfflineDataset ds = sample_dataset(game, behavior, 300, 0.0, 3);

  // The exact Bellman backup is in the class: picked with zero loss.
  QTable truth(dims.num_states, 2, 2);
  for (int s = 0; s < dims.num_states; ++s)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2)
        truth.at(s, a1, a2) = game.reward(0, s, a1, a2);
  FunctionClass fc;
  fc.members.push_back(constant_table(dims, 0.25));
  fc.members.push_back(truth);
  fc.members.push_back(constant_table(dims, 0.75));
  const auto [chosen, index] =
      fit_q_finite_class(ds.step_records(0), v_zero, fc);
  CHECK(index == 1);
  CHECK(chosen.at(0, 0, 0) == truth.at(0, 0, 0));

  // Identical members tie; the lower index wins.
  FunctionClass tie;
  tie.members.push_back(constant_table(dims, 0.5));
  tie.members.push_back(constant_table(dims, 0.5));
  CHECK(fit_q_finite_class(ds.step_records(0), v_zero, tie).second == 0);

  // Against an independent exhaustive loss recomputation.
  FunctionClass random_fc;
  RandomStream stream(55, "class");
  for (int m = 0; m < 3; ++m) {
    QTable q(dims.num_states, 2, 2);
    for (double& v : q.raw()) v = stream.next_double();
    random_fc.members.push_back(std::move(q));
  }
  const int best =
      fit_q_finite_class(ds.step_records(0), v_zero, random_fc).second;
  double best_loss = 1e300;
  int expect = -1;
  for (int m = 0; m < 3; ++m) {
    double loss = 0.0;
    for (const Transition& r : ds.step_records(0)) {
      const double d = random_fc.members[m].at(r.s, r.a1, r.a2) - r.reward;
      loss += d * d;
    }
    if (loss < best_loss) {
      best_loss = loss;
      expect = m;
    }
  }
  CHECK(best == expect);
}

TEST_CASE("function class validation") {
  const GameDims dims{2, 2, 2, 2};
  FunctionClass fc;
  CHECK_THROWS_AS(validate_function_class(fc, dims, 0.5, 0.5), DomainError);
  fc.members.push_back(constant_table(dims, 100.0));
  // 100 exceeds H(1 + eta^{-1} log(1/alpha)) = 2 * (1 + 2 log 2) ~ 4.77.
  CHECK_THROWS_AS(validate_function_class(fc, dims, 0.5, 0.5, true),
                  DomainError);
  CHECK_NOTHROW(validate_function_class(fc, dims, 0.5, 0.5, false));
}

TEST_CASE("d2_divergence definition cases") {
  const GameDims dims{1, 2, 2, 2};
  FunctionClass singleton;
  singleton.members.push_back(constant_table(dims, 0.3));
  const std::vector<StateActionPoint> samples = {{0, 0, 0}, {1, 1, 1}};
  CHECK(d2_divergence(singleton, samples, {0, 0, 0}) == 0.0);

  // {Q, Q + c}: the ratio is c^2 / c^2 = 1 at every point.
  FunctionClass shifted;
  QTable base(dims.num_states, 2, 2);
  RandomStream stream(91, "d2");
  for (double& v : base.raw()) v = stream.next_double();
  QTable plus_c = base;
  for (double& v : plus_c.raw()) v += 0.37;
  shifted.members = {base, plus_c};
  for (int s = 0; s < 2; ++s)
    CHECK(d2_divergence(shifted, samples, {s, 1, 0}) == doctest::Approx(1.0));

  // Three random tables vs. exhaustive pairwise enumeration.
  FunctionClass fc;
  for (int m = 0; m < 3; ++m) {
    QTable q(dims.num_states, 2, 2);
    for (double& v : q.raw()) v = stream.next_double();
    fc.members.push_back(std::move(q));
  }
  std::vector<StateActionPoint> mu;
  for (int i = 0; i < 50; ++i)
    mu.push_back({static_cast<int>(stream.next_u64() % 2),
                  static_cast<int>(stream.next_u64() % 2),
                  static_cast<int>(stream.next_u64() % 2)});
  const StateActionPoint point{1, 0, 1};
  double expect = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      double denom = 0.0;
      for (const auto& p : mu) {
        const double d = fc.members[i].at(p.s, p.a1, p.a2) -
                         fc.members[j].at(p.s, p.a1, p.a2);
        denom += d * d;
      }
      denom /= static_cast<double>(mu.size());
      if (denom <= 0.0) continue;
      const double num = fc.members[i].at(point.s, point.a1, point.a2) -
                         fc.members[j].at(point.s, point.a1, point.a2);
      expect = std::max(expect, num * num / denom);
    }
  CHECK(d2_divergence(fc, mu, point) == doctest::Approx(expect));

  // Swapping members leaves D^2 unchanged (squares are symmetric).
  FunctionClass swapped;
  swapped.members = {fc.members[2], fc.members[0], fc.members[1]};
  CHECK(d2_divergence(swapped, mu, point) ==
        doctest::Approx(d2_divergence(fc, mu, point)));
}

TEST_CASE("unilateral concentrability estimates") {
  // Singleton class: D^2 is identically zero.
  const MarkovGame tiny = small_game(17, 1, 1);
  const GameDims dims = tiny.dims();
  RegularizationConfig cfg{1.0, make_uniform_joint_policy(dims)};
  const JointPolicy uniform = make_uniform_joint_policy(dims);
  FunctionClass singleton;
  singleton.members.push_back(constant_table(dims, 0.1));
  const auto zero = estimate_unilateral_concentrability(tiny, singleton,
                                                        uniform, uniform, cfg);
  CHECK(zero.value == 0.0);
  CHECK_FALSE(zero.sampled);

  // |S| = 1, H = 1, class {Q, Q + c}: D^2 is 1 everywhere, so the max is 1.
  FunctionClass shifted;
  shifted.members = {constant_table(dims, 0.2), constant_table(dims, 0.9)};
  const auto one = estimate_unilateral_concentrability(tiny, shifted, uniform,
                                                       uniform, cfg);
  CHECK(one.value == doctest::Approx(1.0));

  // Exhaustive 2^(H*S) deviation oracle on a small instance.
  const MarkovGame game = small_game(23, 2, 2);
  const GameDims gdims = game.dims();
  RegularizationConfig gcfg{1.0, make_uniform_joint_policy(gdims)};
  const JointPolicy behavior = make_uniform_joint_policy(gdims);
  JointPolicy nash = make_uniform_joint_policy(gdims);
  RandomStream stream(29, "cuni-nash");
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 2; ++s) {
      stream.fill_dirichlet(nash.p1.dist(h, s), 2.0);
      stream.fill_dirichlet(nash.p2.dist(h, s), 2.0);
    }
  FunctionClass fc;
  for (int m = 0; m < 3; ++m) {
    QTable q(gdims.num_states, 2, 2);
    for (double& v : q.raw()) v = stream.next_double();
    fc.members.push_back(std::move(q));
  }
  const auto estimate =
      estimate_unilateral_concentrability(game, fc, behavior, nash, gcfg);
  CHECK(estimate.deviations_evaluated == 32);  // 2^4 per player
  CHECK_FALSE(estimate.sampled);

  // Independent oracle: enumerate all 16 deterministic deviations per player.
  const std::vector<QTable> mu = state_action_visitation(game, behavior);
  double expect = 0.0;
  for (int player = 1; player <= 2; ++player)
    for (int code = 0; code < 16; ++code) {
      JointPolicy pair = nash;
      PolicyTable dev(2, 2, 2, 0.0);
      int c = code;
      for (int h = 0; h < 2; ++h)
        for (int s = 0; s < 2; ++s) {
          dev.dist(h, s)[c % 2] = 1.0;
          c /= 2;
        }
      (player == 1 ? pair.p1 : pair.p2) = dev;
      const auto d = state_action_visitation(game, pair);
      for (int h = 0; h < 2; ++h) {
        double e = 0.0;
        for (int s = 0; s < 2; ++s)
          for (int a1 = 0; a1 < 2; ++a1)
            for (int a2 = 0; a2 < 2; ++a2)
              e += d[h].at(s, a1, a2) *
                   d2_divergence_weighted(fc, mu[h], {s, a1, a2});
        expect = std::max(expect, e);
      }
    }
  CHECK(estimate.value == doctest::Approx(expect));

  // Cap exceeded without sampling raises; with sampling sets the flag.
  ConcentrabilityOptions no_sampling;
  no_sampling.deviation_cap = 8;
  no_sampling.allow_sampling = false;
  CHECK_THROWS_AS(estimate_unilateral_concentrability(game, fc, behavior, nash,
                                                      gcfg, no_sampling),
                  CapacityError);
  ConcentrabilityOptions sampling;
  sampling.deviation_cap = 8;
  sampling.allow_sampling = true;
  const auto sampled = estimate_unilateral_concentrability(
      game, fc, behavior, nash, gcfg, sampling);
  CHECK(sampled.sampled);
  CHECK(sampled.value <= estimate.value + 1e-12);
}

TEST_CASE("state_action_visitation is a distribution per step") {
  const MarkovGame game = small_game(31, 3, 3);
  const JointPolicy pol = make_uniform_joint_policy(game.dims());
  const auto d = state_action_visitation(game, pol);
  REQUIRE(d.size() == 3);
  for (const QTable& table : d) {
    double total = 0.0;
    for (const double v : table.raw()) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_SUITE_END();
