#include "rmg/types.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "rmg/errors.hpp"

namespace rmg {

namespace {

constexpr double kMassTolerance = 1e-12;

void check_distribution(std::span<const double> p, const std::string& what) {
  double total = 0.0;
  for (const double v : p) {
    if (v < 0.0) throw DomainError(what + ": negative probability");
    if (!std::isfinite(v)) throw DomainError(what + ": non-finite probability");
    total += v;
  }
  if (std::abs(total - 1.0) > kMassTolerance)
    throw DomainError(what + ": mass " + std::to_string(total) +
                      " not 1 within 1e-12");
}

}  // namespace

std::vector<std::string> validate_game(const MarkovGame& game, bool strict) {
  if (game.horizon < 1 || game.num_states < 1 || game.num_actions_p1 < 1 ||
      game.num_actions_p2 < 1)
    throw DimensionError("validate_game: all dimensions must be positive");

  const std::size_t cells = static_cast<std::size_t>(game.horizon) *
                            game.num_states * game.num_actions_p1 *
                            game.num_actions_p2;
  if (game.rewards.size() != cells)
    throw DimensionError("validate_game: reward table size mismatch");
  if (game.transitions.size() != cells * game.num_states)
    throw DimensionError("validate_game: transition table size mismatch");
  if (game.initial_dist.size() != static_cast<std::size_t>(game.num_states))
    throw DimensionError("validate_game: initial distribution size mismatch");

  for (int h = 0; h < game.horizon; ++h)
    for (int s = 0; s < game.num_states; ++s)
      for (int a1 = 0; a1 < game.num_actions_p1; ++a1)
        for (int a2 = 0; a2 < game.num_actions_p2; ++a2)
          check_distribution(game.transition_row(h, s, a1, a2),
                             "transition row (h=" + std::to_string(h + 1) +
                                 ", s=" + std::to_string(s) + ")");
  check_distribution(game.initial_dist, "initial distribution");

  std::vector<std::string> warnings;
  bool out_of_range = false;
  for (const double r : game.rewards) {
    if (!std::isfinite(r)) throw DomainError("validate_game: non-finite reward");
    if (r < 0.0 || r > 1.0) out_of_range = true;
  }
  if (out_of_range) {
    if (strict)
      throw DomainError("validate_game: reward outside [0, 1] in strict mode");
    warnings.push_back("rewards outside [0, 1]; value-scale bounds do not apply");
  }
  return warnings;
}

void validate_policy(const PolicyTable& policy) {
  if (policy.horizon() < 1 || policy.num_states() < 1 ||
      policy.num_actions() < 1)
    throw DimensionError("validate_policy: empty policy table");
  for (int h = 0; h < policy.horizon(); ++h)
    for (int s = 0; s < policy.num_states(); ++s)
      check_distribution(policy.dist(h, s),
                         "policy (h=" + std::to_string(h + 1) +
                             ", s=" + std::to_string(s) + ")");
}

void validate_joint_policy(const JointPolicy& policy, const GameDims& dims) {
  if (policy.p1.horizon() != dims.horizon ||
      policy.p1.num_states() != dims.num_states ||
      policy.p1.num_actions() != dims.num_actions_p1 ||
      policy.p2.horizon() != dims.horizon ||
      policy.p2.num_states() != dims.num_states ||
      policy.p2.num_actions() != dims.num_actions_p2)
    throw DimensionError("validate_joint_policy: dimensions mismatch game");
  validate_policy(policy.p1);
  validate_policy(policy.p2);
}

void validate_config(const RegularizationConfig& cfg, const GameDims& dims) {
  if (!(cfg.eta > 0.0))
    throw DomainError("validate_config: eta must be positive");
  validate_joint_policy(cfg.refs, dims);
}

PolicyTable make_uniform_policy(int horizon, int num_states, int num_actions) {
  return PolicyTable(horizon, num_states, num_actions, 1.0 / num_actions);
}

JointPolicy make_uniform_joint_policy(const GameDims& dims) {
  return {make_uniform_policy(dims.horizon, dims.num_states,
                              dims.num_actions_p1),
          make_uniform_policy(dims.horizon, dims.num_states,
                              dims.num_actions_p2)};
}

}  // namespace rmg
