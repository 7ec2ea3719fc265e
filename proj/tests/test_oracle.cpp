#include <doctest.h>

#include <cmath>
#include <vector>

#include "rmg/errors.hpp"
#include "rmg/oracle.hpp"
#include "rmg/rng.hpp"
#include "rmg/stage_solver.hpp"

using namespace rmg;

TEST_SUITE_BEGIN("oracle");

namespace {

StageGame make_stage(std::vector<std::vector<double>> payoff, double eta,
                     std::vector<double> ref1 = {},
                     std::vector<double> ref2 = {}) {
  StageGame sg;
  sg.num_actions_p1 = static_cast<int>(payoff.size());
  sg.num_actions_p2 = static_cast<int>(payoff[0].size());
  for (const auto& row : payoff)
    for (const double v : row) sg.payoff.push_back(v);
  sg.eta = eta;
  sg.ref1 = ref1.empty()
                ? std::vector<double>(sg.num_actions_p1,
                                      1.0 / sg.num_actions_p1)
                : std::move(ref1);
  sg.ref2 = ref2.empty()
                ? std::vector<double>(sg.num_actions_p2,
                                      1.0 / sg.num_actions_p2)
                : std::move(ref2);
  return sg;
}

double l1(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total;
}

}  // namespace

TEST_CASE("brute_force_best_response_value closed forms") {
  const std::vector<double> uniform = {0.5, 0.5};

  // q identically zero: the max sits at the reference with value 0.
  CHECK(brute_force_best_response_value({{0.0, 0.0}}, 1.0, uniform, 1e-3) ==
        doctest::Approx(0.0).epsilon(1e-5));

  // q = [1, 0], uniform ref, eta = 1: log((e+1)/2).
  const double expected = std::log((std::exp(1.0) + 1.0) / 2.0);
  CHECK(brute_force_best_response_value({{1.0, 0.0}}, 1.0, uniform, 1e-4) ==
        doctest::Approx(expected).epsilon(1e-4));

  // Point-mass reference: the only feasible point scores q at the atom.
  CHECK(brute_force_best_response_value({{0.3, 9.0}}, 1.0, {{1.0, 0.0}},
                                        1e-3) == doctest::Approx(0.3));
}

TEST_CASE("brute_force_stage_ne closed forms") {
  // Zero payoff: the equilibrium is the reference pair.
  auto zero = make_stage({{0.0, 0.0}, {0.0, 0.0}}, 1.0);
  const auto res = brute_force_stage_ne(zero, 1e-3);
  CHECK(l1(res.pi1, zero.ref1) <= 2e-3);
  CHECK(l1(res.pi2, zero.ref2) <= 2e-3);
  CHECK(res.value == doctest::Approx(0.0).epsilon(1e-5));

  // Matching pennies: uniform/uniform, value near zero.
  auto pennies = make_stage({{1.0, -1.0}, {-1.0, 1.0}}, 1.0);
  const auto mp = brute_force_stage_ne(pennies, 1e-3);
  CHECK(l1(mp.pi1, pennies.ref1) <= 2e-3);
  CHECK(l1(mp.pi2, pennies.ref2) <= 2e-3);
  CHECK(std::abs(mp.value) <= 1e-3);
}

TEST_CASE("oracle cross-validates the solver on seeded games") {
  RandomStream stream(31337, "oracle-cross");
  const double grid_res = 1e-3;
  for (int rep = 0; rep < 6; ++rep) {
    const int a1 = 2 + static_cast<int>(stream.next_u64() % 2);
    const int a2 = 2 + static_cast<int>(stream.next_u64() % 2);
    std::vector<std::vector<double>> payoff(a1, std::vector<double>(a2));
    for (auto& row : payoff)
      for (double& v : row) v = stream.next_double();
    std::vector<double> ref1(a1), ref2(a2);
    stream.fill_dirichlet(ref1, 1.0);
    stream.fill_dirichlet(ref2, 1.0);
    const double eta = rep % 2 == 0 ? 1.0 : 0.3;
    auto sg = make_stage(payoff, eta, ref1, ref2);

    const auto solved = solve_stage_equilibrium(sg, 1e-11);
    const auto grid = brute_force_stage_ne(sg, grid_res);
    CHECK(l1(solved.pi1, grid.pi1) <= 5.0 * grid_res);
    CHECK(l1(solved.pi2, grid.pi2) <= 5.0 * grid_res);
    CHECK(std::abs(solved.value - grid.value) <= grid.accuracy + 1e-6);
  }
}

TEST_CASE("oracle preconditions") {
  auto sg = make_stage({{0.0, 0.0}, {0.0, 0.0}}, 1.0);
  CHECK_THROWS_AS(brute_force_stage_ne(sg, 1e-6), DomainError);
  CHECK_THROWS_AS(brute_force_stage_ne(sg, 0.5), DomainError);

  StageGame wide;
  wide.num_actions_p1 = 4;
  wide.num_actions_p2 = 2;
  wide.payoff.assign(8, 0.0);
  wide.eta = 1.0;
  wide.ref1.assign(4, 0.25);
  wide.ref2.assign(2, 0.5);
  CHECK_THROWS_AS(brute_force_stage_ne(wide, 1e-3), CapacityError);

  const std::vector<double> q = {1.0, 0.0, 0.0, 0.0};
  const std::vector<double> ref = {0.25, 0.25, 0.25, 0.25};
  CHECK_THROWS_AS(brute_force_best_response_value(q, 1.0, ref, 1e-3),
                  CapacityError);
}

TEST_SUITE_END();
