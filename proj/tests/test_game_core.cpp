#include <doctest.h>

#include <cmath>
#include <vector>

#include "rmg/errors.hpp"
#include "rmg/game_core.hpp"
#include "rmg/harness.hpp"
#include "rmg/oracle.hpp"
#include "rmg/rng.hpp"
#include "rmg/rose.hpp"

using namespace rmg;

TEST_SUITE_BEGIN("game_core");

namespace {

// Single-state, single-step game wrapping one payoff matrix.
MarkovGame matrix_game(const std::vector<std::vector<double>>& payoff) {
  MarkovGame g;
  g.horizon = 1;
  g.num_states = 1;
  g.num_actions_p1 = static_cast<int>(payoff.size());
  g.num_actions_p2 = static_cast<int>(payoff[0].size());
  for (const auto& row : payoff)
    for (const double v : row) g.rewards.push_back(v);
  g.transitions.assign(g.rewards.size(), 1.0);
  g.initial_dist = {1.0};
  return g;
}

RegularizationConfig uniform_cfg(const GameDims& dims, double eta) {
  return {eta, make_uniform_joint_policy(dims)};
}

JointPolicy random_feasible_policy(const GameDims& dims, std::uint64_t seed) {
  JointPolicy p;
  p.p1 = PolicyTable(dims.horizon, dims.num_states, dims.num_actions_p1);
  p.p2 = PolicyTable(dims.horizon, dims.num_states, dims.num_actions_p2);
  RandomStream stream(seed, "test-policy");
  for (int h = 0; h < dims.horizon; ++h)
    for (int s = 0; s < dims.num_states; ++s) {
      stream.fill_dirichlet(p.p1.dist(h, s), 1.0);
      stream.fill_dirichlet(p.p2.dist(h, s), 1.0);
    }
  return p;
}

}  // namespace

TEST_CASE("kl_divergence basics") {
  const std::vector<double> half = {0.5, 0.5};
  CHECK(kl_divergence(half, half) == 0.0);

  const std::vector<double> point = {1.0, 0.0};
  CHECK(kl_divergence(point, half) == doctest::Approx(std::log(2.0)));

  const std::vector<double> skew = {0.9, 0.1};
  const double expected = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(kl_divergence(skew, half) == doctest::Approx(expected));

  CHECK_THROWS_AS(kl_divergence(half, point), SupportError);
  const std::vector<double> three = {0.3, 0.3, 0.4};
  CHECK_THROWS_AS(kl_divergence(half, three), DimensionError);
}

TEST_CASE("min_ref_prob") {
  const GameDims dims{2, 3, 2, 2};
  CHECK(min_ref_prob(make_uniform_joint_policy(dims)) == 0.5);

  JointPolicy skew;
  skew.p1 = PolicyTable(2, 3, 2);
  skew.p2 = PolicyTable(2, 3, 2);
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 3; ++s) {
      skew.p1.dist(h, s)[0] = 0.7;
      skew.p1.dist(h, s)[1] = 0.3;
      skew.p2.dist(h, s)[0] = 0.7;
      skew.p2.dist(h, s)[1] = 0.3;
    }
  CHECK(min_ref_prob(skew) == doctest::Approx(0.3));

  JointPolicy det;
  det.p1 = PolicyTable(2, 3, 2);
  det.p2 = PolicyTable(2, 3, 2);
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 3; ++s) {
      det.p1.dist(h, s)[0] = 1.0;
      det.p2.dist(h, s)[1] = 1.0;
    }
  CHECK(min_ref_prob(det) == 1.0);
}

TEST_CASE("check_side_condition") {
  CHECK(check_side_condition(0.01, 1, 0.9));
  CHECK_FALSE(check_side_condition(0.001, 2, 0.5));
  CHECK(check_side_condition(0.25, 1, 1.0));  // boundary: 4 * 0.25 = 1
  CHECK_THROWS_AS(check_side_condition(-1.0, 1, 0.5), DomainError);
  CHECK_THROWS_AS(check_side_condition(0.1, 0, 0.5), DomainError);
  CHECK_THROWS_AS(check_side_condition(0.1, 1, 0.0), DomainError);
}

TEST_CASE("evaluate_policy on closed-form cases") {
  // Zero rewards, policy = refs: every value is zero.
  MarkovGame zero = matrix_game({{0.0, 0.0}, {0.0, 0.0}});
  const auto cfg = uniform_cfg(zero.dims(), 1.0);
  const auto values = evaluate_policy(zero, cfg.refs, cfg);
  CHECK(values.v.at(0, 0) == doctest::Approx(0.0));
  CHECK(values.v.at(1, 0) == 0.0);  // explicit terminal zero row

  // Constant reward c at H = 1: V = c.
  MarkovGame constant = matrix_game({{0.4, 0.4}, {0.4, 0.4}});
  const auto cfg_c = uniform_cfg(constant.dims(), 1.0);
  CHECK(evaluate_policy(constant, cfg_c.refs, cfg_c).v.at(0, 0) ==
        doctest::Approx(0.4));

  // Zero rewards, player 1 deviates from the uniform ref: V = -KL.
  JointPolicy d = cfg.refs;
  d.p1.dist(0, 0)[0] = 0.9;
  d.p1.dist(0, 0)[1] = 0.1;
  const double kl = kl_divergence(d.p1.dist(0, 0), cfg.refs.p1.dist(0, 0));
  CHECK(evaluate_policy(zero, d, cfg).v.at(0, 0) == doctest::Approx(-kl));

  // Q tables are returned and consistent with the recursion.
  const auto vt = evaluate_policy(constant, cfg_c.refs, cfg_c);
  REQUIRE(vt.q.has_value());
  CHECK((*vt.q)[0].at(0, 1, 1) == doctest::Approx(0.4));
}

TEST_CASE("evaluate_policy rejects support violations") {
  MarkovGame zero = matrix_game({{0.0, 0.0}, {0.0, 0.0}});
  auto cfg = uniform_cfg(zero.dims(), 1.0);
  cfg.refs.p1.dist(0, 0)[0] = 1.0;
  cfg.refs.p1.dist(0, 0)[1] = 0.0;
  JointPolicy policy = make_uniform_joint_policy(zero.dims());
  CHECK_THROWS_AS(evaluate_policy(zero, policy, cfg), SupportError);
}

TEST_CASE("best_response_values closed forms") {
  // Zero game, everything at refs: value 0.
  MarkovGame zero = matrix_game({{0.0, 0.0}, {0.0, 0.0}});
  const auto cfg = uniform_cfg(zero.dims(), 1.0);
  const auto br = best_response_values(zero, cfg.refs, PlayerId::one, cfg);
  CHECK(br.values.v.at(0, 0) == doctest::Approx(0.0));

  // Payoff column [1, 0] against a point-mass opponent: the responder sees
  // marginal [1, 0] and the value is log((e+1)/2).
  MarkovGame g = matrix_game({{1.0, 1.0}, {0.0, 0.0}});
  const auto cfg_g = uniform_cfg(g.dims(), 1.0);
  const auto br_g = best_response_values(g, cfg_g.refs, PlayerId::one, cfg_g);
  CHECK(br_g.values.v.at(0, 0) ==
        doctest::Approx(std::log((std::exp(1.0) + 1.0) / 2.0)));
  // Cross-check against the independent grid oracle.
  const std::vector<double> marginal = {1.0, 0.0};
  const std::vector<double> ref = {0.5, 0.5};
  const double grid_value =
      brute_force_best_response_value(marginal, 1.0, ref, 1e-4);
  CHECK(br_g.values.v.at(0, 0) == doctest::Approx(grid_value).epsilon(1e-4));

  // Point-mass reference anchors the responder, collapsing the
  // log-sum-exp to the supported action.
  auto cfg_det = cfg_g;
  cfg_det.refs.p1.dist(0, 0)[0] = 0.0;
  cfg_det.refs.p1.dist(0, 0)[1] = 1.0;
  const auto br_det =
      best_response_values(g, cfg_det.refs, PlayerId::one, cfg_det);
  CHECK(br_det.values.v.at(0, 0) == doctest::Approx(0.0));  // row 2 pays 0
  CHECK(br_det.responder_policy.dist(0, 0)[0] == 0.0);
  CHECK(br_det.responder_policy.dist(0, 0)[1] == doctest::Approx(1.0));
}

TEST_CASE("duality gap: zero game at refs, solved equilibrium, random games") {
  MarkovGame zero = matrix_game({{0.0, 0.0}, {0.0, 0.0}});
  const auto cfg = uniform_cfg(zero.dims(), 1.0);
  CHECK(duality_gap(zero, cfg.refs, cfg) == doctest::Approx(0.0));

  GameSpec spec;
  spec.horizon = 2;
  spec.num_states = 3;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MarkovGame game = generate_random_game(spec, seed);
    const auto gcfg = uniform_cfg(game.dims(), 0.5);
    const SolveResult exact = solve_exact(game, gcfg, 1e-11);
    CHECK(duality_gap(game, exact.policy, gcfg) <= 1e-8);

    const JointPolicy random_policy =
        random_feasible_policy(game.dims(), seed + 100);
    const double gap = duality_gap(game, random_policy, gcfg);
    CHECK(gap >= 0.0);
    CHECK(gap > 1e-6);  // a random policy is exploitable
  }
}

TEST_CASE("value bound holds for best responses") {
  GameSpec spec;
  spec.horizon = 3;
  spec.num_states = 4;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MarkovGame game = generate_random_game(spec, seed);
    const auto cfg = uniform_cfg(game.dims(), 0.5);
    const double alpha = min_ref_prob(cfg.refs);
    const double scale = per_step_value_scale(cfg.eta, alpha);
    const JointPolicy opponent =
        random_feasible_policy(game.dims(), seed + 500);
    for (const PlayerId who : {PlayerId::one, PlayerId::two}) {
      const auto br = best_response_values(game, opponent, who, cfg);
      for (int h = 0; h < game.horizon; ++h)
        for (int s = 0; s < game.num_states; ++s)
          CHECK(std::abs(br.values.v.at(h, s)) <=
                (game.horizon - h) * scale + 1e-12);
    }
  }
}

TEST_CASE("saddle ordering of evaluation between the two best responses") {
  GameSpec spec;
  spec.horizon = 2;
  spec.num_states = 3;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const MarkovGame game = generate_random_game(spec, seed);
    const auto cfg = uniform_cfg(game.dims(), 0.7);
    const JointPolicy pi = random_feasible_policy(game.dims(), seed + 900);
    const auto mid = evaluate_policy(game, pi, cfg);
    const auto hi = best_response_values(game, pi, PlayerId::one, cfg);
    const auto lo = best_response_values(game, pi, PlayerId::two, cfg);
    double e_mid = 0.0, e_hi = 0.0, e_lo = 0.0;
    for (int s = 0; s < game.num_states; ++s) {
      e_mid += game.initial_dist[s] * mid.v.at(0, s);
      e_hi += game.initial_dist[s] * hi.values.v.at(0, s);
      e_lo += game.initial_dist[s] * lo.values.v.at(0, s);
    }
    CHECK(e_lo <= e_mid + 1e-9);
    CHECK(e_mid <= e_hi + 1e-9);
  }
}

TEST_CASE("feeding the implied Gibbs policy back reproduces the BR value") {
  GameSpec spec;
  spec.horizon = 3;
  spec.num_states = 3;
  for (std::uint64_t seed = 2; seed <= 6; ++seed) {
    const MarkovGame game = generate_random_game(spec, seed);
    const auto cfg = uniform_cfg(game.dims(), 0.6);
    const JointPolicy opponent =
        random_feasible_policy(game.dims(), seed + 300);
    const auto br = best_response_values(game, opponent, PlayerId::one, cfg);
    JointPolicy pair;
    pair.p1 = br.responder_policy;
    pair.p2 = opponent.p2;
    const auto eval = evaluate_policy(game, pair, cfg);
    for (int h = 0; h < game.horizon; ++h)
      for (int s = 0; s < game.num_states; ++s)
        CHECK(eval.v.at(h, s) ==
              doctest::Approx(br.values.v.at(h, s)).epsilon(1e-9));
  }
}

TEST_CASE("value tables re-derive under the evaluation recursion") {
  GameSpec spec;
  spec.horizon = 2;
  spec.num_states = 3;
  const MarkovGame game = generate_random_game(spec, 61);
  const auto cfg = uniform_cfg(game.dims(), 0.7);
  const JointPolicy pi = random_feasible_policy(game.dims(), 62);
  ValueTables tables = evaluate_policy(game, pi, cfg);
  CHECK(value_consistency_residual(game, pi, cfg, tables) <= 1e-12);

  // A corrupted Q entry shows up as a residual of exactly its size.
  (*tables.q)[1].at(0, 0, 0) += 0.25;
  CHECK(value_consistency_residual(game, pi, cfg, tables) >=
        0.25 - 1e-12);

  ValueTables no_q;
  no_q.v = tables.v;
  CHECK_THROWS_AS(value_consistency_residual(game, pi, cfg, no_q),
                  DomainError);
}

TEST_CASE("pinsker inequality on random distribution pairs") {
  RandomStream stream(99, "pinsker");
  std::vector<double> p(4), q(4);
  for (int rep = 0; rep < 200; ++rep) {
    stream.fill_dirichlet(p, 0.8);
    stream.fill_dirichlet(q, 0.8);
    double l1 = 0.0;
    for (int i = 0; i < 4; ++i) l1 += std::abs(p[i] - q[i]);
    CHECK(l1 <= std::sqrt(2.0 * kl_divergence(p, q)) + 1e-12);
  }
}

TEST_SUITE_END();
