#include "rmg/stage_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rmg/errors.hpp"
#include "rmg/game_core.hpp"

namespace rmg {

namespace {

constexpr double kMinEta = 1e-8;

void check_probability_vector(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (const double v : p) {
    if (v < 0.0 || !std::isfinite(v))
      throw DomainError(std::string(what) + ": invalid probability entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw DomainError(std::string(what) + ": mass not 1 within 1e-12");
}

// pi(a) from log-ratio weights u on ref's support; exact zeros elsewhere.
void policy_from_log_ratio(std::span<const double> ref,
                           std::span<const double> u, std::span<double> out) {
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

}  // namespace

void validate_stage_game(const StageGame& sg) {
  if (sg.num_actions_p1 < 1 || sg.num_actions_p2 < 1)
    throw DimensionError("stage game: action counts must be positive");
  if (sg.payoff.size() != static_cast<std::size_t>(sg.num_actions_p1) *
                              sg.num_actions_p2)
    throw DimensionError("stage game: payoff size mismatch");
  if (sg.ref1.size() != static_cast<std::size_t>(sg.num_actions_p1) ||
      sg.ref2.size() != static_cast<std::size_t>(sg.num_actions_p2))
    throw DimensionError("stage game: reference size mismatch");
  if (sg.eta < kMinEta)
    throw DomainError("stage game: eta below 1e-8 (unregularized limit)");
  check_probability_vector(sg.ref1, "stage game ref1");
  check_probability_vector(sg.ref2, "stage game ref2");
}

std::vector<double> gibbs_response(std::span<const double> q, double eta,
                                   std::span<const double> ref,
                                   Direction direction) {
  if (q.size() != ref.size())
    throw DimensionError("gibbs_response: length mismatch");
  if (!(eta > 0.0)) throw DomainError("gibbs_response: eta must be positive");
  double ref_mass = 0.0;
  for (const double r : ref) ref_mass += r;
  if (ref_mass <= 0.0) throw DomainError("gibbs_response: all-zero reference");

  const double sign = direction == Direction::maximize ? 1.0 : -1.0;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ref.size(); ++a)
    if (ref[a] > 0.0) max_logit = std::max(max_logit, sign * eta * q[a]);

  std::vector<double> pi(ref.size(), 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < ref.size(); ++a) {
    if (ref[a] > 0.0) pi[a] = ref[a] * std::exp(sign * eta * q[a] - max_logit);
    total += pi[a];
  }
  for (double& v : pi) v /= total;
  return pi;
}

double stage_objective(const StageGame& sg, std::span<const double> pi1,
                       std::span<const double> pi2) {
  validate_stage_game(sg);
  if (pi1.size() != static_cast<std::size_t>(sg.num_actions_p1) ||
      pi2.size() != static_cast<std::size_t>(sg.num_actions_p2))
    throw DimensionError("stage_objective: policy length mismatch");
  double bilinear = 0.0;
  for (int a1 = 0; a1 < sg.num_actions_p1; ++a1)
    for (int a2 = 0; a2 < sg.num_actions_p2; ++a2)
      bilinear += pi1[a1] * sg.at(a1, a2) * pi2[a2];
  const double inv_eta = 1.0 / sg.eta;
  return bilinear - inv_eta * kl_divergence(pi1, sg.ref1) +
         inv_eta * kl_divergence(pi2, sg.ref2);
}

namespace {

// Closed-form upper and lower envelopes at (pi1, pi2):
//   best1 = max_mu obj(mu, pi2), best2 = min_nu obj(pi1, nu).
struct Envelopes {
  double best1;
  double best2;
};

// log sum ref(a) exp(sign * eta * q(a)) over support, allocation-free.
double lse_support(std::span<const double> ref, std::span<const double> q,
                   double sign_eta) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ref.size(); ++a)
    if (ref[a] > 0.0) max_logit = std::max(max_logit, sign_eta * q[a]);
  double total = 0.0;
  for (std::size_t a = 0; a < ref.size(); ++a)
    if (ref[a] > 0.0) total += ref[a] * std::exp(sign_eta * q[a] - max_logit);
  return max_logit + std::log(total);
}

Envelopes stage_envelopes(const StageGame& sg, std::span<const double> pi1,
                          std::span<const double> pi2,
                          std::span<double> q1_scratch,
                          std::span<double> q2_scratch) {
  const int A1 = sg.num_actions_p1;
  const int A2 = sg.num_actions_p2;
  for (int a1 = 0; a1 < A1; ++a1) {
    double v = 0.0;
    for (int a2 = 0; a2 < A2; ++a2) v += sg.at(a1, a2) * pi2[a2];
    q1_scratch[a1] = v;
  }
  for (int a2 = 0; a2 < A2; ++a2) {
    double v = 0.0;
    for (int a1 = 0; a1 < A1; ++a1) v += sg.at(a1, a2) * pi1[a1];
    q2_scratch[a2] = v;
  }
  const double eta = sg.eta;
  const double inv_eta = 1.0 / eta;
  const double best1 = inv_eta * lse_support(sg.ref1, q1_scratch, eta) +
                       inv_eta * kl_divergence(pi2, sg.ref2);
  const double best2 = -inv_eta * lse_support(sg.ref2, q2_scratch, -eta) -
                       inv_eta * kl_divergence(pi1, sg.ref1);
  return {best1, best2};
}

}  // namespace

double stage_exploitability(const StageGame& sg, std::span<const double> pi1,
                            std::span<const double> pi2) {
  validate_stage_game(sg);
  if (pi1.size() != static_cast<std::size_t>(sg.num_actions_p1) ||
      pi2.size() != static_cast<std::size_t>(sg.num_actions_p2))
    throw DimensionError("stage_exploitability: policy length mismatch");
  std::vector<double> q1(sg.num_actions_p1), q2(sg.num_actions_p2);
  const auto [best1, best2] = stage_envelopes(sg, pi1, pi2, q1, q2);
  return best1 - best2;
}

StageSolution solve_stage_equilibrium(
    const StageGame& sg, double tol, long max_iter,
    const std::optional<std::pair<std::vector<double>, std::vector<double>>>&
        init) {
  validate_stage_game(sg);
  if (!(tol > 0.0)) throw DomainError("solve_stage_equilibrium: tol <= 0");
  if (max_iter < 1) throw DomainError("solve_stage_equilibrium: max_iter < 1");

  const int A1 = sg.num_actions_p1;
  const int A2 = sg.num_actions_p2;
  const double eta = sg.eta;

  // Log-ratio iterates relative to the references; zero = start at refs.
  std::vector<double> u1(A1, 0.0), u2(A2, 0.0);
  if (init) {
    const auto& [init1, init2] = *init;
    if (init1.size() != static_cast<std::size_t>(A1) ||
        init2.size() != static_cast<std::size_t>(A2))
      throw DimensionError("solve_stage_equilibrium: init length mismatch");
    check_probability_vector(init1, "init pi1");
    check_probability_vector(init2, "init pi2");
    for (int a = 0; a < A1; ++a) {
      if ((init1[a] > 0.0) != (sg.ref1[a] > 0.0))
        throw SupportError("solve_stage_equilibrium: init support differs "
                           "from reference support");
      u1[a] = sg.ref1[a] > 0.0 ? std::log(init1[a] / sg.ref1[a]) : 0.0;
    }
    for (int a = 0; a < A2; ++a) {
      if ((init2[a] > 0.0) != (sg.ref2[a] > 0.0))
        throw SupportError("solve_stage_equilibrium: init support differs "
                           "from reference support");
      u2[a] = sg.ref2[a] > 0.0 ? std::log(init2[a] / sg.ref2[a]) : 0.0;
    }
  }

  std::vector<double> p1(A1), p2(A2), q1(A1), q2(A2);
  double last_expl = std::numeric_limits<double>::infinity();
  for (long t = 0; t <= max_iter; ++t) {
    policy_from_log_ratio(sg.ref1, u1, p1);
    policy_from_log_ratio(sg.ref2, u2, p2);
    const auto [best1, best2] = stage_envelopes(sg, p1, p2, q1, q2);
    last_expl = best1 - best2;
    if (last_expl <= tol) {
      StageSolution sol;
      sol.pi1 = p1;
      sol.pi2 = p2;
      sol.value = stage_objective(sg, p1, p2);
      sol.iterations = t;
      sol.exploitability = std::max(last_expl, 0.0);
      return sol;
    }
    if (t == max_iter) break;
    const double gamma = 2.0 * eta / (static_cast<double>(t) + 2.0);
    const double carry = 1.0 - gamma / eta;
    for (int a = 0; a < A1; ++a)
      if (sg.ref1[a] > 0.0) u1[a] = carry * u1[a] + gamma * q1[a];
    for (int a = 0; a < A2; ++a)
      if (sg.ref2[a] > 0.0) u2[a] = carry * u2[a] - gamma * q2[a];
  }
  throw ConvergenceError(
      "solve_stage_equilibrium: exploitability " + std::to_string(last_expl) +
          " above tol " + std::to_string(tol) + " after " +
          std::to_string(max_iter) + " iterations",
      last_expl);
}

}  // namespace rmg
