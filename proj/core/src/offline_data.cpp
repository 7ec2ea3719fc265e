#include "rmg/offline_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rmg/errors.hpp"
#include "rmg/game_core.hpp"
#include "rmg/rng.hpp"

namespace rmg {

OfflineDataset::OfflineDataset(GameDims dims, std::vector<Transition> records)
    : dims_(dims), records_(std::move(records)) {
  if (records_.empty()) throw DomainError("OfflineDataset: no records");
  std::sort(records_.begin(), records_.end(),
            [](const Transition& a, const Transition& b) {
              return std::pair(a.step, a.traj) < std::pair(b.step, b.traj);
            });
  const std::size_t per_step = records_.size() / dims_.horizon;
  if (per_step * dims_.horizon != records_.size())
    throw DimensionError("OfflineDataset: record count not divisible by H");
  num_trajectories_ = static_cast<int>(per_step);
  for (int h = 0; h < dims_.horizon; ++h) {
    const auto block = step_records(h);
    for (int i = 0; i < num_trajectories_; ++i) {
      const Transition& r = block[i];
      if (r.step != h)
        throw DimensionError("OfflineDataset: uneven step grouping");
      if (r.s < 0 || r.s >= dims_.num_states || r.s_next < 0 ||
          r.s_next >= dims_.num_states || r.a1 < 0 ||
          r.a1 >= dims_.num_actions_p1 || r.a2 < 0 ||
          r.a2 >= dims_.num_actions_p2)
        throw DimensionError("OfflineDataset: record indices out of range");
      if (i > 0 && block[i - 1].traj == r.traj)
        throw DimensionError(
            "OfflineDataset: trajectory has duplicate records at one step");
    }
  }
}

std::span<const Transition> OfflineDataset::step_records(int h) const {
  if (h < 0 || h >= dims_.horizon)
    throw DimensionError("OfflineDataset: step out of range");
  return {records_.data() +
              static_cast<std::size_t>(h) * num_trajectories_,
          static_cast<std::size_t>(num_trajectories_)};
}

JointPolicy make_behavior_policy(const GameDims& dims, BehaviorKind kind,
                                 const JointPolicy* refs,
                                 const JointPolicy* custom) {
  switch (kind) {
    case BehaviorKind::uniform:
      return make_uniform_joint_policy(dims);
    case BehaviorKind::refs:
      if (refs == nullptr)
        throw DomainError("make_behavior_policy: refs kind needs references");
      validate_joint_policy(*refs, dims);
      return *refs;
    case BehaviorKind::custom:
      if (custom == nullptr)
        throw DomainError("make_behavior_policy: custom kind needs a policy");
      validate_joint_policy(*custom, dims);
      return *custom;
  }
  throw DomainError("make_behavior_policy: unknown kind");
}

OfflineDataset sample_dataset(const MarkovGame& game,
                              const JointPolicy& behavior, int n,
                              double noise_sigma, std::uint64_t seed,
                              bool strict) {
  if (n < 1) throw DomainError("sample_dataset: n must be >= 1");
  if (noise_sigma < 0.0)
    throw DomainError("sample_dataset: negative noise_sigma");
  if (strict && noise_sigma > 1.0)
    throw DomainError(
        "sample_dataset: noise_sigma > 1 violates the 1-sub-Gaussian "
        "assumption (strict mode)");
  validate_joint_policy(behavior, game.dims());

  std::vector<Transition> records;
  records.reserve(static_cast<std::size_t>(n) * game.horizon);
  for (int traj = 0; traj < n; ++traj) {
    RandomStream stream(seed, "traj", static_cast<std::uint64_t>(traj));
    int s = stream.next_categorical(game.initial_dist);
    for (int h = 0; h < game.horizon; ++h) {
      const int a1 = stream.next_categorical(behavior.p1.dist(h, s));
      const int a2 = stream.next_categorical(behavior.p2.dist(h, s));
      const double noise = stream.next_gaussian();
      const double r = game.reward(h, s, a1, a2) + noise_sigma * noise;
      const int s_next =
          stream.next_categorical(game.transition_row(h, s, a1, a2));
      records.push_back({traj, h, s, a1, a2, r, s_next});
      s = s_next;
    }
  }
  return OfflineDataset(game.dims(), std::move(records));
}

TabularFit fit_q_tabular(std::span<const Transition> records_h,
                         std::span<const double> v_next,
                         const GameDims& dims) {
  if (v_next.size() != static_cast<std::size_t>(dims.num_states))
    throw DimensionError("fit_q_tabular: v_next length mismatch");
  TabularFit fit;
  fit.q = QTable(dims.num_states, dims.num_actions_p1, dims.num_actions_p2);
  std::vector<long> counts(fit.q.raw().size(), 0);
  for (const Transition& r : records_h) {
    const double target = r.reward + v_next[r.s_next];
    fit.q.at(r.s, r.a1, r.a2) += target;
    ++counts[(static_cast<std::size_t>(r.s) * dims.num_actions_p1 + r.a1) *
                 dims.num_actions_p2 +
             r.a2];
  }
  fit.visited.assign(counts.size(), 0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      fit.q.raw()[i] /= static_cast<double>(counts[i]);
      fit.visited[i] = 1;
    } else {
      fit.q.raw()[i] = 0.0;
      ++fit.empty_cells;
    }
  }
  return fit;
}

void validate_function_class(const FunctionClass& fc, const GameDims& dims,
                             double eta, double alpha, bool strict) {
  if (fc.members.empty())
    throw DomainError("function class must be non-empty");
  for (const QTable& q : fc.members) {
    if (q.num_states() != dims.num_states ||
        q.num_actions_p1() != dims.num_actions_p1 ||
        q.num_actions_p2() != dims.num_actions_p2)
      throw DimensionError("function class member dimension mismatch");
  }
  if (strict) {
    const double c_val = dims.horizon * per_step_value_scale(eta, alpha);
    for (const QTable& q : fc.members)
      for (const double v : q.raw())
        if (std::abs(v) > c_val)
          throw DomainError(
              "function class member exceeds the value bound " +
              std::to_string(c_val) + " in strict mode");
  }
}

std::pair<QTable, int> fit_q_finite_class(
    std::span<const Transition> records_h, std::span<const double> v_next,
    const FunctionClass& fc) {
  if (fc.members.empty())
    throw DomainError("fit_q_finite_class: empty function class");
  double best_loss = std::numeric_limits<double>::infinity();
  int best_index = 0;
  for (int m = 0; m < static_cast<int>(fc.members.size()); ++m) {
    const QTable& q = fc.members[m];
    double loss = 0.0;
    for (const Transition& r : records_h) {
      const double residual =
          q.at(r.s, r.a1, r.a2) - (r.reward + v_next[r.s_next]);
      loss += residual * residual;
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_index = m;
    }
  }
  return {fc.members[best_index], best_index};
}

namespace {

double pair_ratio_sup(const FunctionClass& fc,
                      const std::vector<double>& denominators,
                      const StateActionPoint& point) {
  const int members = static_cast<int>(fc.members.size());
  double sup = 0.0;
  int pair = 0;
  for (int i = 0; i < members; ++i) {
    for (int j = i + 1; j < members; ++j, ++pair) {
      const double denom = denominators[pair];
      if (denom <= 0.0) continue;  // positivity restriction
      const double diff = fc.members[i].at(point.s, point.a1, point.a2) -
                          fc.members[j].at(point.s, point.a1, point.a2);
      sup = std::max(sup, diff * diff / denom);
    }
  }
  return sup;
}

}  // namespace

double d2_divergence(const FunctionClass& fc,
                     std::span<const StateActionPoint> mu_samples,
                     const StateActionPoint& point) {
  if (fc.members.empty()) throw DomainError("d2_divergence: empty class");
  const int members = static_cast<int>(fc.members.size());
  std::vector<double> denominators(
      static_cast<std::size_t>(members) * (members - 1) / 2, 0.0);
  if (!mu_samples.empty()) {
    int pair = 0;
    for (int i = 0; i < members; ++i)
      for (int j = i + 1; j < members; ++j, ++pair) {
        double total = 0.0;
        for (const StateActionPoint& p : mu_samples) {
          const double diff = fc.members[i].at(p.s, p.a1, p.a2) -
                              fc.members[j].at(p.s, p.a1, p.a2);
          total += diff * diff;
        }
        denominators[pair] = total / static_cast<double>(mu_samples.size());
      }
  }
  return pair_ratio_sup(fc, denominators, point);
}

double d2_divergence_weighted(const FunctionClass& fc, const QTable& mu_h,
                              const StateActionPoint& point) {
  if (fc.members.empty()) throw DomainError("d2_divergence: empty class");
  const int members = static_cast<int>(fc.members.size());
  std::vector<double> denominators(
      static_cast<std::size_t>(members) * (members - 1) / 2, 0.0);
  int pair = 0;
  for (int i = 0; i < members; ++i)
    for (int j = i + 1; j < members; ++j, ++pair) {
      double total = 0.0;
      for (std::size_t c = 0; c < mu_h.raw().size(); ++c) {
        const double diff = fc.members[i].raw()[c] - fc.members[j].raw()[c];
        total += mu_h.raw()[c] * diff * diff;
      }
      denominators[pair] = total;
    }
  return pair_ratio_sup(fc, denominators, point);
}

std::vector<QTable> state_action_visitation(const MarkovGame& game,
                                            const JointPolicy& policy) {
  validate_joint_policy(policy, game.dims());
  const int H = game.horizon;
  const int S = game.num_states;
  const int A1 = game.num_actions_p1;
  const int A2 = game.num_actions_p2;

  std::vector<QTable> visitation(H);
  std::vector<double> d_state(game.initial_dist.begin(),
                              game.initial_dist.end());
  std::vector<double> d_next(S, 0.0);
  for (int h = 0; h < H; ++h) {
    visitation[h] = QTable(S, A1, A2);
    std::fill(d_next.begin(), d_next.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      if (d_state[s] == 0.0) continue;
      const auto pi1 = policy.p1.dist(h, s);
      const auto pi2 = policy.p2.dist(h, s);
      for (int a1 = 0; a1 < A1; ++a1) {
        if (pi1[a1] == 0.0) continue;
        for (int a2 = 0; a2 < A2; ++a2) {
          const double mass = d_state[s] * pi1[a1] * pi2[a2];
          if (mass == 0.0) continue;
          visitation[h].at(s, a1, a2) = mass;
          const auto row = game.transition_row(h, s, a1, a2);
          for (int sn = 0; sn < S; ++sn) d_next[sn] += mass * row[sn];
        }
      }
    }
    d_state = d_next;
  }
  return visitation;
}

namespace {

// Deterministic Markov deviation for one player: an action per (h, s),
// encoded as base-|A| digits of `code` when enumerating exhaustively.
PolicyTable deviation_policy(const GameDims& dims, int num_actions,
                             unsigned long long code) {
  PolicyTable table(dims.horizon, dims.num_states, num_actions, 0.0);
  for (int h = 0; h < dims.horizon; ++h)
    for (int s = 0; s < dims.num_states; ++s) {
      const int action = static_cast<int>(code % num_actions);
      code /= num_actions;
      table.dist(h, s)[action] = 1.0;
    }
  return table;
}

PolicyTable random_deviation_policy(const GameDims& dims, int num_actions,
                                    RandomStream& stream) {
  PolicyTable table(dims.horizon, dims.num_states, num_actions, 0.0);
  for (int h = 0; h < dims.horizon; ++h)
    for (int s = 0; s < dims.num_states; ++s) {
      const int action =
          static_cast<int>(stream.next_u64() % static_cast<unsigned>(num_actions));
      table.dist(h, s)[action] = 1.0;
    }
  return table;
}

}  // namespace

ConcentrabilityEstimate estimate_unilateral_concentrability(
    const MarkovGame& game, const FunctionClass& fc,
    const JointPolicy& behavior, const JointPolicy& nash,
    const RegularizationConfig& cfg, const ConcentrabilityOptions& options) {
  validate_joint_policy(nash, game.dims());
  validate_function_class(fc, game.dims(), cfg.eta, min_ref_prob(cfg.refs),
                          /*strict=*/false);
  const GameDims dims = game.dims();
  const int H = dims.horizon;

  // Exact data marginal per step, then the D^2 lookup per (h, cell).
  const std::vector<QTable> mu = state_action_visitation(game, behavior);
  std::vector<QTable> d2_table(H);
  for (int h = 0; h < H; ++h) {
    d2_table[h] =
        QTable(dims.num_states, dims.num_actions_p1, dims.num_actions_p2);
    for (int s = 0; s < dims.num_states; ++s)
      for (int a1 = 0; a1 < dims.num_actions_p1; ++a1)
        for (int a2 = 0; a2 < dims.num_actions_p2; ++a2)
          d2_table[h].at(s, a1, a2) =
              d2_divergence_weighted(fc, mu[h], {s, a1, a2});
  }

  ConcentrabilityEstimate out;
  for (const PlayerId player : {PlayerId::one, PlayerId::two}) {
    const bool is_p1 = player == PlayerId::one;
    const int actions = is_p1 ? dims.num_actions_p1 : dims.num_actions_p2;
    const double log_count =
        static_cast<double>(H) * dims.num_states * std::log(actions);
    const bool exhaustive =
        log_count <= std::log(static_cast<double>(options.deviation_cap)) + 1e-12;
    if (!exhaustive && !options.allow_sampling)
      throw CapacityError(
          "estimate_unilateral_concentrability: deviation count exceeds cap " +
          std::to_string(options.deviation_cap) + " and sampling is disabled");

    unsigned long long count = options.deviation_cap;
    if (exhaustive) {
      count = 1;
      for (int i = 0; i < H * dims.num_states; ++i) count *= actions;
    } else {
      out.sampled = true;
    }

    RandomStream stream(options.seed, "cuni-dev", is_p1 ? 1 : 2);
    for (unsigned long long k = 0; k < count; ++k) {
      const PolicyTable deviation =
          exhaustive ? deviation_policy(dims, actions, k)
                     : random_deviation_policy(dims, actions, stream);
      JointPolicy pair = nash;
      (is_p1 ? pair.p1 : pair.p2) = deviation;
      const std::vector<QTable> d = state_action_visitation(game, pair);
      for (int h = 0; h < H; ++h) {
        double expectation = 0.0;
        for (std::size_t c = 0; c < d[h].raw().size(); ++c)
          expectation += d[h].raw()[c] * d2_table[h].raw()[c];
        out.value = std::max(out.value, expectation);
      }
      ++out.deviations_evaluated;
    }
  }
  return out;
}

}  // namespace rmg
