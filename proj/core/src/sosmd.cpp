#include "rmg/sosmd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "rmg/errors.hpp"
#include "solve_common.hpp"

namespace rmg {

double stepsize_schedule(long t, double eta) {
  if (t < 0) throw DomainError("stepsize_schedule: t must be >= 0");
  if (!(eta > 0.0)) throw DomainError("stepsize_schedule: eta must be positive");
  return 2.0 * eta / (static_cast<double>(t) + 2.0);
}

std::vector<double> marginal_payoff(const QTable& q_hat_h,
                                    std::span<const double> opponent, int s,
                                    PlayerId player) {
  const int A1 = q_hat_h.num_actions_p1();
  const int A2 = q_hat_h.num_actions_p2();
  const bool is_p1 = player == PlayerId::one;
  if (opponent.size() != static_cast<std::size_t>(is_p1 ? A2 : A1))
    throw DimensionError("marginal_payoff: opponent length mismatch");
  if (s < 0 || s >= q_hat_h.num_states())
    throw DimensionError("marginal_payoff: state out of range");
  std::vector<double> q(is_p1 ? A1 : A2, 0.0);
  for (int a1 = 0; a1 < A1; ++a1)
    for (int a2 = 0; a2 < A2; ++a2) {
      const double v = q_hat_h.at(s, a1, a2);
      if (is_p1)
        q[a1] += opponent[a2] * v;
      else
        q[a2] += opponent[a1] * v;
    }
  return q;
}

std::vector<double> mirror_step(std::span<const double> pi_cur,
                                std::span<const double> q, double gamma,
                                double eta, std::span<const double> ref,
                                Direction direction) {
  if (pi_cur.size() != q.size() || pi_cur.size() != ref.size())
    throw DimensionError("mirror_step: length mismatch");
  if (!(eta > 0.0)) throw DomainError("mirror_step: eta must be positive");
  if (!(gamma > 0.0) || gamma > eta)
    throw DomainError(
        "mirror_step: gamma must lie in (0, eta]; the iterate exponent would "
        "be negative otherwise");
  const double sign = direction == Direction::maximize ? 1.0 : -1.0;
  const double carry = 1.0 - gamma / eta;

  const std::size_t n = ref.size();
  std::vector<double> weights(n, -std::numeric_limits<double>::infinity());
  double max_w = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n; ++a) {
    if (ref[a] <= 0.0) {
      if (pi_cur[a] > 0.0)
        throw SupportError("mirror_step: pi has mass outside ref support");
      continue;
    }
    const double log_ratio =
        pi_cur[a] > 0.0 ? std::log(pi_cur[a] / ref[a])
                        : -std::numeric_limits<double>::infinity();
    // carry == 0 is the pure Gibbs limit; skip the (possibly -inf) history.
    const double w = (carry > 0.0 ? carry * log_ratio : 0.0) +
                     gamma * sign * q[a];
    weights[a] = w;
    max_w = std::max(max_w, w);
  }
  if (max_w == -std::numeric_limits<double>::infinity())
    throw DomainError("mirror_step: reference has empty support");

  std::vector<double> out(n, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (ref[a] > 0.0) out[a] = ref[a] * std::exp(weights[a] - max_w);
    total += out[a];
  }
  for (double& v : out) v /= total;
  return out;
}

namespace {

struct StateIterate {
  std::vector<double> u1;  // log pi/ref on support, player 1
  std::vector<double> u2;
};

void read_policy(std::span<const double> ref, std::span<const double> u,
                 std::span<double> out) {
  double max_w = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ref.size(); ++a)
    if (ref[a] > 0.0) max_w = std::max(max_w, u[a]);
  double total = 0.0;
  for (std::size_t a = 0; a < ref.size(); ++a) {
    out[a] = ref[a] > 0.0 ? ref[a] * std::exp(u[a] - max_w) : 0.0;
    total += out[a];
  }
  for (std::size_t a = 0; a < ref.size(); ++a) out[a] /= total;
}

double kl_on_support(std::span<const double> p, std::span<const double> q) {
  double total = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a)
    if (p[a] > 0.0) total += p[a] * std::log(p[a] / q[a]);
  return std::max(total, 0.0);
}

double l1_distance(std::span<const double> p, std::span<const double> q) {
  double total = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) total += std::abs(p[a] - q[a]);
  return total;
}

// sup over supported actions of |log(pi(a)/ref(a))| for a normalized pi.
double max_abs_log_ratio(std::span<const double> pi,
                         std::span<const double> ref) {
  double m = 0.0;
  for (std::size_t a = 0; a < ref.size(); ++a)
    if (ref[a] > 0.0) m = std::max(m, std::abs(std::log(pi[a] / ref[a])));
  return m;
}

}  // namespace

std::pair<SolveResult, IterateDiagnostics> sosmd_solve(
    const OfflineDataset& dataset, const GameDims& dims,
    const RegularizationConfig& cfg, long num_rounds, const FitterSpec& fitter,
    const SosmdOptions& options) {
  if (num_rounds < 0) throw DomainError("sosmd_solve: negative round count");
  if (dataset.dims() != dims)
    throw DimensionError("sosmd_solve: dataset dimensions mismatch");
  validate_config(cfg, dims);
  if (!options.custom_schedule.empty()) {
    if (static_cast<long>(options.custom_schedule.size()) < num_rounds)
      throw DomainError("sosmd_solve: custom schedule shorter than T");
    for (long t = 0; t < num_rounds; ++t) {
      const double g = options.custom_schedule[t];
      if (!(g > 0.0) || g > cfg.eta)
        throw DomainError(
            "sosmd_solve: custom stepsize outside (0, eta] at t=" +
            std::to_string(t));
    }
  }

  const int S = dims.num_states;
  const int A1 = dims.num_actions_p1;
  const int A2 = dims.num_actions_p2;
  const double eta = cfg.eta;
  const long T = num_rounds;

  SolveResult result = detail::make_empty_result(dims);
  IterateDiagnostics diag;
  diag.enabled = options.record_diagnostics;
  diag.default_schedule = options.custom_schedule.empty();
  if (diag.enabled) {
    diag.rows.reserve(static_cast<std::size_t>(dims.horizon) * (T + 1));
    diag.kl_trace.assign(dims.horizon, {});
    diag.reference.p1 = PolicyTable(dims.horizon, S, A1);
    diag.reference.p2 = PolicyTable(dims.horizon, S, A2);
  }

  const auto gamma_at = [&](long t) {
    return options.custom_schedule.empty() ? stepsize_schedule(t, eta)
                                           : options.custom_schedule[t];
  };

  std::vector<double> p1(A1), p2(A2), q1(A1), q2(A2);
  for (int h = dims.horizon - 1; h >= 0; --h) {
    const auto v_next = result.v_hat.row(h + 1);
    try {
      result.q_hat[h] =
          detail::fit_step_q(fitter, dataset, dims, h, v_next,
                             &result.coverage[h],
                             &result.empty_cells_per_step[h]);
    } catch (const DimensionError& e) {
      throw DimensionError("sosmd_solve: fitter failed at step h=" +
                           std::to_string(h + 1) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("sosmd_solve: fitter failed at step h=" +
                        std::to_string(h + 1) + ": " + e.what());
    }
    const QTable& q_hat = result.q_hat[h];

    std::vector<IterateStats> step_stats;
    if (diag.enabled) {
      step_stats.assign(T + 1, {});
      for (long t = 0; t <= T; ++t) {
        step_stats[t].step = h;
        step_stats[t].t = t;
        step_stats[t].gamma = diag.default_schedule
                                  ? stepsize_schedule(t, eta)
                                  : (t < T ? options.custom_schedule[t] : 0.0);
      }
      diag.kl_trace[h].assign(S, std::vector<double>(T + 1, 0.0));
    }

    for (int s = 0; s < S; ++s) {
      const auto ref1 = cfg.refs.p1.dist(h, s);
      const auto ref2 = cfg.refs.p2.dist(h, s);

      // Certified reference equilibrium of this stage, when requested.
      std::vector<double> eq1, eq2;
      if (diag.enabled) {
        const StageGame sg = detail::make_stage_game(q_hat, s, cfg, h);
        const StageSolution sol = solve_stage_equilibrium(
            sg, options.reference_tol, options.reference_max_iter);
        eq1 = sol.pi1;
        eq2 = sol.pi2;
        std::copy(eq1.begin(), eq1.end(),
                  diag.reference.p1.dist(h, s).begin());
        std::copy(eq2.begin(), eq2.end(),
                  diag.reference.p2.dist(h, s).begin());
      }

      StateIterate it;
      it.u1.assign(A1, 0.0);
      it.u2.assign(A2, 0.0);

      const auto record = [&](long t) {
        if (!diag.enabled) return;
        read_policy(ref1, it.u1, p1);
        read_policy(ref2, it.u2, p2);
        const double kl_sum = kl_on_support(eq1, p1) + kl_on_support(eq2, p2);
        const double l1 =
            std::max(l1_distance(eq1, p1), l1_distance(eq2, p2));
        const double log_ratio = std::max(max_abs_log_ratio(p1, ref1),
                                          max_abs_log_ratio(p2, ref2));
        diag.kl_trace[h][s][t] = kl_sum;
        IterateStats& row = step_stats[t];
        row.sup_kl_sum = std::max(row.sup_kl_sum, kl_sum);
        row.sup_l1 = std::max(row.sup_l1, l1);
        row.max_abs_log_ratio = std::max(row.max_abs_log_ratio, log_ratio);
      };

      record(0);
      for (long t = 0; t < T; ++t) {
        read_policy(ref1, it.u1, p1);
        read_policy(ref2, it.u2, p2);
        for (int a1 = 0; a1 < A1; ++a1) {
          double v = 0.0;
          for (int a2 = 0; a2 < A2; ++a2) v += q_hat.at(s, a1, a2) * p2[a2];
          q1[a1] = v;
        }
        for (int a2 = 0; a2 < A2; ++a2) {
          double v = 0.0;
          for (int a1 = 0; a1 < A1; ++a1) v += q_hat.at(s, a1, a2) * p1[a1];
          q2[a2] = v;
        }
        const double gamma = gamma_at(t);
        const double carry = 1.0 - gamma / eta;
        for (int a = 0; a < A1; ++a)
          if (ref1[a] > 0.0) it.u1[a] = carry * it.u1[a] + gamma * q1[a];
        for (int a = 0; a < A2; ++a)
          if (ref2[a] > 0.0) it.u2[a] = carry * it.u2[a] - gamma * q2[a];
        record(t + 1);
      }

      // Read out the last iterate; T = 0 returns the references verbatim.
      auto out1 = result.policy.p1.dist(h, s);
      auto out2 = result.policy.p2.dist(h, s);
      if (T == 0) {
        std::copy(ref1.begin(), ref1.end(), out1.begin());
        std::copy(ref2.begin(), ref2.end(), out2.begin());
      } else {
        read_policy(ref1, it.u1, p1);
        read_policy(ref2, it.u2, p2);
        std::copy(p1.begin(), p1.end(), out1.begin());
        std::copy(p2.begin(), p2.end(), out2.begin());
      }

      double expectation = 0.0;
      for (int a1 = 0; a1 < A1; ++a1)
        for (int a2 = 0; a2 < A2; ++a2)
          expectation += out1[a1] * out2[a2] * q_hat.at(s, a1, a2);
      result.v_hat.at(h, s) = expectation -
                              kl_on_support(out1, ref1) / eta +
                              kl_on_support(out2, ref2) / eta;
    }
    if (diag.enabled)
      diag.rows.insert(diag.rows.end(), step_stats.begin(), step_stats.end());
  }
  return {std::move(result), std::move(diag)};
}

}  // namespace rmg
