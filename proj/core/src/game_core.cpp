#include "rmg/game_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rmg/errors.hpp"

namespace rmg {

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw DimensionError("kl_divergence: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0)
      throw SupportError("kl_divergence: p has mass where q vanishes (index " +
                         std::to_string(i) + ")");
    total += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(total, 0.0);
}

double log_sum_exp_over_support(std::span<const double> ref,
                                std::span<const double> logits) {
  if (ref.size() != logits.size())
    throw DimensionError("log_sum_exp_over_support: length mismatch");
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (ref[i] > 0.0) max_logit = std::max(max_logit, logits[i]);
  if (max_logit == -std::numeric_limits<double>::infinity())
    throw DomainError("log_sum_exp_over_support: reference has empty support");
  double total = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (ref[i] > 0.0) total += ref[i] * std::exp(logits[i] - max_logit);
  return max_logit + std::log(total);
}

double min_ref_prob(const JointPolicy& refs) {
  double alpha = 1.0;
  const auto scan = [&alpha](const PolicyTable& table) {
    for (int h = 0; h < table.horizon(); ++h)
      for (int s = 0; s < table.num_states(); ++s)
        for (const double v : table.dist(h, s))
          if (v > 0.0) alpha = std::min(alpha, v);
  };
  scan(refs.p1);
  scan(refs.p2);
  return alpha;
}

bool check_side_condition(double eta, int horizon, double alpha) {
  if (!(eta > 0.0)) throw DomainError("check_side_condition: eta <= 0");
  if (horizon < 1) throw DomainError("check_side_condition: horizon < 1");
  if (!(alpha > 0.0) || alpha > 1.0)
    throw DomainError("check_side_condition: alpha outside (0, 1]");
  const double h2 = static_cast<double>(horizon) * horizon;
  return 4.0 * h2 * (eta + std::log(1.0 / alpha)) <= 1.0;
}

double per_step_value_scale(double eta, double alpha) {
  return 1.0 + std::log(1.0 / alpha) / eta;
}

namespace {

void check_support_containment(const PolicyTable& policy,
                               const PolicyTable& ref, const char* who) {
  for (int h = 0; h < policy.horizon(); ++h)
    for (int s = 0; s < policy.num_states(); ++s) {
      const auto p = policy.dist(h, s);
      const auto r = ref.dist(h, s);
      for (std::size_t a = 0; a < p.size(); ++a)
        if (p[a] > 0.0 && r[a] <= 0.0)
          throw SupportError(std::string(who) +
                             " policy puts mass outside its reference support "
                             "(h=" + std::to_string(h + 1) +
                             ", s=" + std::to_string(s) +
                             ", a=" + std::to_string(a) + ")");
    }
}

// E_{s' ~ P(.|h,s,a1,a2)}[v_next]
double expected_next_value(const MarkovGame& game, int h, int s, int a1,
                           int a2, std::span<const double> v_next) {
  const auto row = game.transition_row(h, s, a1, a2);
  double total = 0.0;
  for (int sn = 0; sn < game.num_states; ++sn) total += row[sn] * v_next[sn];
  return total;
}

}  // namespace

ValueTables evaluate_policy(const MarkovGame& game, const JointPolicy& policy,
                            const RegularizationConfig& cfg) {
  validate_joint_policy(policy, game.dims());
  validate_config(cfg, game.dims());
  check_support_containment(policy.p1, cfg.refs.p1, "player 1");
  check_support_containment(policy.p2, cfg.refs.p2, "player 2");

  const int H = game.horizon;
  const int S = game.num_states;
  const int A1 = game.num_actions_p1;
  const int A2 = game.num_actions_p2;
  const double inv_eta = 1.0 / cfg.eta;

  ValueTables out;
  out.v = ValueTable(H, S);
  out.q.emplace();
  out.q->resize(H);

  for (int h = H - 1; h >= 0; --h) {
    QTable& q = (*out.q)[h] = QTable(S, A1, A2);
    const auto v_next = out.v.row(h + 1);
    for (int s = 0; s < S; ++s) {
      const auto pi1 = policy.p1.dist(h, s);
      const auto pi2 = policy.p2.dist(h, s);
      double expectation = 0.0;
      for (int a1 = 0; a1 < A1; ++a1) {
        for (int a2 = 0; a2 < A2; ++a2) {
          const double qv = game.reward(h, s, a1, a2) +
                            expected_next_value(game, h, s, a1, a2, v_next);
          q.at(s, a1, a2) = qv;
          expectation += pi1[a1] * pi2[a2] * qv;
        }
      }
      out.v.at(h, s) = expectation -
                       inv_eta * kl_divergence(pi1, cfg.refs.p1.dist(h, s)) +
                       inv_eta * kl_divergence(pi2, cfg.refs.p2.dist(h, s));
    }
  }
  return out;
}

BestResponseResult best_response_values(const MarkovGame& game,
                                        const JointPolicy& fixed,
                                        PlayerId responder,
                                        const RegularizationConfig& cfg) {
  validate_config(cfg, game.dims());
  const int H = game.horizon;
  const int S = game.num_states;
  const int A1 = game.num_actions_p1;
  const int A2 = game.num_actions_p2;
  const double eta = cfg.eta;
  const double inv_eta = 1.0 / eta;

  const bool responder_is_p1 = responder == PlayerId::one;
  const PolicyTable& opponent = responder_is_p1 ? fixed.p2 : fixed.p1;
  const PolicyTable& opponent_ref =
      responder_is_p1 ? cfg.refs.p2 : cfg.refs.p1;
  const PolicyTable& responder_ref =
      responder_is_p1 ? cfg.refs.p1 : cfg.refs.p2;
  if (opponent.horizon() != H || opponent.num_states() != S ||
      opponent.num_actions() != (responder_is_p1 ? A2 : A1))
    throw DimensionError("best_response_values: opponent policy dims mismatch");
  check_support_containment(opponent, opponent_ref,
                            responder_is_p1 ? "player 2" : "player 1");

  const int num_resp_actions = responder_is_p1 ? A1 : A2;
  BestResponseResult out;
  out.values.v = ValueTable(H, S);
  out.responder_policy = PolicyTable(H, S, num_resp_actions);

  std::vector<double> marginal(num_resp_actions);
  std::vector<double> logits(num_resp_actions);
  for (int h = H - 1; h >= 0; --h) {
    const auto v_next = out.values.v.row(h + 1);
    for (int s = 0; s < S; ++s) {
      const auto opp = opponent.dist(h, s);
      const auto ref = responder_ref.dist(h, s);
      std::fill(marginal.begin(), marginal.end(), 0.0);
      for (int a1 = 0; a1 < A1; ++a1)
        for (int a2 = 0; a2 < A2; ++a2) {
          const double qv = game.reward(h, s, a1, a2) +
                            expected_next_value(game, h, s, a1, a2, v_next);
          if (responder_is_p1)
            marginal[a1] += opp[a2] * qv;
          else
            marginal[a2] += opp[a1] * qv;
        }

      const double sign = responder_is_p1 ? 1.0 : -1.0;
      for (int a = 0; a < num_resp_actions; ++a)
        logits[a] = sign * eta * marginal[a];
      const double lse = log_sum_exp_over_support(ref, logits);
      const double opp_kl =
          kl_divergence(opp, opponent_ref.dist(h, s)) * inv_eta;
      out.values.v.at(h, s) =
          responder_is_p1 ? inv_eta * lse + opp_kl : -inv_eta * lse - opp_kl;

      // Gibbs stage policy: proportional to ref * exp(sign * eta * marginal)
      // on the reference support.
      const auto pol = out.responder_policy.dist(h, s);
      double total = 0.0;
      for (int a = 0; a < num_resp_actions; ++a) {
        pol[a] = ref[a] > 0.0 ? ref[a] * std::exp(logits[a] - lse) : 0.0;
        total += pol[a];
      }
      for (int a = 0; a < num_resp_actions; ++a) pol[a] /= total;
    }
  }
  return out;
}

double value_consistency_residual(const MarkovGame& game,
                                  const JointPolicy& policy,
                                  const RegularizationConfig& cfg,
                                  const ValueTables& tables) {
  if (!tables.q.has_value())
    throw DomainError("value_consistency_residual: tables carry no Q");
  if (static_cast<int>(tables.q->size()) != game.horizon ||
      tables.v.horizon() != game.horizon ||
      tables.v.num_states() != game.num_states)
    throw DimensionError("value_consistency_residual: table dims mismatch");

  const double inv_eta = 1.0 / cfg.eta;
  double residual = 0.0;
  for (int s = 0; s < game.num_states; ++s)
    residual = std::max(residual, std::abs(tables.v.at(game.horizon, s)));
  for (int h = 0; h < game.horizon; ++h) {
    const QTable& q = (*tables.q)[h];
    const auto v_next = tables.v.row(h + 1);
    for (int s = 0; s < game.num_states; ++s) {
      const auto pi1 = policy.p1.dist(h, s);
      const auto pi2 = policy.p2.dist(h, s);
      double expectation = 0.0;
      for (int a1 = 0; a1 < game.num_actions_p1; ++a1)
        for (int a2 = 0; a2 < game.num_actions_p2; ++a2) {
          const double backed =
              game.reward(h, s, a1, a2) +
              expected_next_value(game, h, s, a1, a2, v_next);
          residual = std::max(residual, std::abs(q.at(s, a1, a2) - backed));
          expectation += pi1[a1] * pi2[a2] * q.at(s, a1, a2);
        }
      const double value =
          expectation - inv_eta * kl_divergence(pi1, cfg.refs.p1.dist(h, s)) +
          inv_eta * kl_divergence(pi2, cfg.refs.p2.dist(h, s));
      residual = std::max(residual, std::abs(tables.v.at(h, s) - value));
    }
  }
  return residual;
}

double duality_gap(const MarkovGame& game, const JointPolicy& policy,
                   const RegularizationConfig& cfg) {
  const auto upper = best_response_values(game, policy, PlayerId::one, cfg);
  const auto lower = best_response_values(game, policy, PlayerId::two, cfg);
  double gap = 0.0;
  for (int s = 0; s < game.num_states; ++s)
    gap += game.initial_dist[s] *
           (upper.values.v.at(0, s) - lower.values.v.at(0, s));
  if (gap < -1e-9)
    throw InternalError("duality_gap: negative gap " + std::to_string(gap) +
                        " beyond numerical noise");
  return std::max(gap, 0.0);
}

}  // namespace rmg
