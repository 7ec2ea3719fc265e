#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rmg {

struct GameDims {
  int horizon = 0;
  int num_states = 0;
  int num_actions_p1 = 0;
  int num_actions_p2 = 0;

  bool operator==(const GameDims&) const = default;
};

// Per-step, per-state action distributions for one player. Steps are
// 0-based in memory; file formats write 1-based step indices.
class PolicyTable {
 public:
  PolicyTable() = default;
  PolicyTable(int horizon, int num_states, int num_actions, double fill = 0.0)
      : horizon_(horizon),
        num_states_(num_states),
        num_actions_(num_actions),
        data_(static_cast<std::size_t>(horizon) * num_states * num_actions,
              fill) {}

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  std::span<double> dist(int h, int s) {
    return {data_.data() + offset(h, s), static_cast<std::size_t>(num_actions_)};
  }
  std::span<const double> dist(int h, int s) const {
    return {data_.data() + offset(h, s), static_cast<std::size_t>(num_actions_)};
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::size_t offset(int h, int s) const {
    return (static_cast<std::size_t>(h) * num_states_ + s) * num_actions_;
  }

  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> data_;
};

struct JointPolicy {
  PolicyTable p1;
  PolicyTable p2;
};

// Dense action-value table for a single step, indexed (s, a1, a2).
class QTable {
 public:
  QTable() = default;
  QTable(int num_states, int num_actions_p1, int num_actions_p2,
         double fill = 0.0)
      : num_states_(num_states),
        a1_(num_actions_p1),
        a2_(num_actions_p2),
        data_(static_cast<std::size_t>(num_states) * num_actions_p1 *
                  num_actions_p2,
              fill) {}

  int num_states() const { return num_states_; }
  int num_actions_p1() const { return a1_; }
  int num_actions_p2() const { return a2_; }

  double& at(int s, int a1, int a2) { return data_[index(s, a1, a2)]; }
  double at(int s, int a1, int a2) const { return data_[index(s, a1, a2)]; }

  // Contiguous payoff block for one state, row-major over (a1, a2).
  std::span<const double> state_block(int s) const {
    return {data_.data() + static_cast<std::size_t>(s) * a1_ * a2_,
            static_cast<std::size_t>(a1_) * a2_};
  }
  std::span<double> state_block(int s) {
    return {data_.data() + static_cast<std::size_t>(s) * a1_ * a2_,
            static_cast<std::size_t>(a1_) * a2_};
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::size_t index(int s, int a1, int a2) const {
    return (static_cast<std::size_t>(s) * a1_ + a1) * a2_ + a2;
  }

  int num_states_ = 0;
  int a1_ = 0;
  int a2_ = 0;
  std::vector<double> data_;
};

// State values for steps 0..H; row H is the explicit zero terminal row, so
// backward-induction code needs no special cases.
class ValueTable {
 public:
  ValueTable() = default;
  ValueTable(int horizon, int num_states)
      : horizon_(horizon),
        num_states_(num_states),
        data_(static_cast<std::size_t>(horizon + 1) * num_states, 0.0) {}

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }

  std::span<double> row(int h) {
    return {data_.data() + static_cast<std::size_t>(h) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }
  std::span<const double> row(int h) const {
    return {data_.data() + static_cast<std::size_t>(h) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }

  double& at(int h, int s) {
    return data_[static_cast<std::size_t>(h) * num_states_ + s];
  }
  double at(int h, int s) const {
    return data_[static_cast<std::size_t>(h) * num_states_ + s];
  }

 private:
  int horizon_ = 0;
  int num_states_ = 0;
  std::vector<double> data_;
};

struct ValueTables {
  ValueTable v;
  std::optional<std::vector<QTable>> q;  // one table per step when present
};

// Finite-horizon two-player zero-sum Markov game. Transition rows and the
// initial distribution are probability vectors over states.
struct MarkovGame {
  int horizon = 0;
  int num_states = 0;
  int num_actions_p1 = 0;
  int num_actions_p2 = 0;
  std::vector<double> transitions;   // [h][s][a1][a2] -> row over next states
  std::vector<double> rewards;       // [h][s][a1][a2]
  std::vector<double> initial_dist;  // [s]

  GameDims dims() const {
    return {horizon, num_states, num_actions_p1, num_actions_p2};
  }

  std::span<const double> transition_row(int h, int s, int a1, int a2) const {
    return {transitions.data() + transition_offset(h, s, a1, a2),
            static_cast<std::size_t>(num_states)};
  }
  std::span<double> transition_row(int h, int s, int a1, int a2) {
    return {transitions.data() + transition_offset(h, s, a1, a2),
            static_cast<std::size_t>(num_states)};
  }

  double reward(int h, int s, int a1, int a2) const {
    return rewards[reward_offset(h, s, a1, a2)];
  }
  double& reward(int h, int s, int a1, int a2) {
    return rewards[reward_offset(h, s, a1, a2)];
  }

  std::size_t reward_offset(int h, int s, int a1, int a2) const {
    return ((static_cast<std::size_t>(h) * num_states + s) * num_actions_p1 +
            a1) *
               num_actions_p2 +
           a2;
  }
  std::size_t transition_offset(int h, int s, int a1, int a2) const {
    return reward_offset(h, s, a1, a2) * num_states;
  }
};

struct RegularizationConfig {
  double eta = 1.0;    // inverse-temperature regularization coefficient
  JointPolicy refs;    // reference policy pair the KL penalties anchor to
};

// Validates probability rows, the initial distribution, and (in strict mode)
// the [0, 1] reward range. Throws on hard violations; reward-range issues in
// non-strict mode come back as warnings instead.
std::vector<std::string> validate_game(const MarkovGame& game,
                                       bool strict = true);

// Checks every action distribution sums to 1 within 1e-12 and is
// elementwise non-negative. Throws DimensionError / DomainError.
void validate_policy(const PolicyTable& policy);
void validate_joint_policy(const JointPolicy& policy, const GameDims& dims);

void validate_config(const RegularizationConfig& cfg, const GameDims& dims);

PolicyTable make_uniform_policy(int horizon, int num_states, int num_actions);
JointPolicy make_uniform_joint_policy(const GameDims& dims);

}  // namespace rmg
