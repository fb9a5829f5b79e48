// Copyright 2026 The InSPO Tabular Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "inspo/exact_solver.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "inspo/errors.h"

namespace inspo {
namespace {

// Seed stream for update orders, shared with the practical solver so both
// draw identical permutations for the same seed.
constexpr uint64_t kOrderStream = 101;

// Flat table of joint policy probabilities [s * J + a].
std::vector<double> JointTable(const TabularGame& game,
                               const FactoredPolicy& policy) {
  const int S = game.num_states();
  const int J = game.num_joint_actions();
  std::vector<double> out(static_cast<size_t>(S) * J);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < J; ++a) {
      out[static_cast<size_t>(s) * J + a] = policy.JointProb(game.joint(), s, a);
    }
  }
  return out;
}

void CheckShapes(const TabularGame& game, const FactoredPolicy& policy,
                 const BehaviorModel& mu) {
  if (policy.num_states() != game.num_states() ||
      policy.actions_per_agent() != game.actions_per_agent()) {
    throw std::invalid_argument("policy shape does not match the game");
  }
  if (mu.shape.num_states != game.num_states() ||
      mu.shape.actions_per_agent != game.actions_per_agent()) {
    throw std::invalid_argument("behavior model shape does not match the game");
  }
}

}  // namespace

double TemperatureSchedule::BetaAt(int iteration) const {
  return beta0 * std::pow(beta_decay, iteration);
}

void TemperatureSchedule::Validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("alpha must be positive and finite");
  }
  if (!(beta0 >= 0.0) || !std::isfinite(beta0)) {
    throw ConfigError("beta0 must be nonnegative and finite");
  }
  if (!(beta_decay > 0.0 && beta_decay <= 1.0)) {
    throw ConfigError("beta_decay must lie in (0, 1]");
  }
}

void CheckSupport(const FactoredPolicy& policy, const BehaviorModel& mu) {
  for (int i = 0; i < policy.num_agents(); ++i) {
    for (int s = 0; s < policy.num_states(); ++s) {
      if (!mu.visited[s]) continue;
      std::span<const double> pi = policy.Row(i, s);
      std::span<const double> m = mu.factored.Row(i, s);
      for (size_t a = 0; a < pi.size(); ++a) {
        if (InSupport(pi[a]) && !InSupport(m[a])) {
          std::ostringstream msg;
          msg << "agent " << i << " plays action " << a << " with probability "
              << pi[a] << " at state " << s
              << " where the behavior policy never does (KL is infinite)";
          throw SupportError(msg.str());
        }
      }
    }
  }
}

std::vector<double> RegularizationPenalty(const TabularGame& game,
                                          const FactoredPolicy& policy,
                                          const BehaviorModel& mu,
                                          Temperatures temps) {
  std::vector<double> pen(game.num_states(), 0.0);
  for (int s = 0; s < game.num_states(); ++s) {
    if (game.is_terminal(s)) continue;
    double total = 0.0;
    for (int i = 0; i < game.num_agents(); ++i) {
      std::span<const double> pi = policy.Row(i, s);
      std::span<const double> m = mu.factored.Row(i, s);
      for (size_t a = 0; a < pi.size(); ++a) {
        if (pi[a] <= 0.0) continue;
        const double lp = FlooredLog(pi[a]);
        total += pi[a] * (temps.alpha * (lp - FlooredLog(m[a])) + temps.beta * lp);
      }
    }
    pen[s] = total;
  }
  return pen;
}

std::vector<double> SoftStateValues(const TabularGame& game,
                                    const FactoredPolicy& policy,
                                    const BehaviorModel& mu, Temperatures temps,
                                    const GlobalQTable& q) {
  std::vector<double> v = RegularizationPenalty(game, policy, mu, temps);
  for (int s = 0; s < game.num_states(); ++s) {
    if (game.is_terminal(s)) {
      v[s] = 0.0;
      continue;
    }
    double e = 0.0;
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      e += policy.JointProb(game.joint(), s, a) * q(s, a);
    }
    v[s] = e - v[s];
  }
  return v;
}

GlobalQTable ApplyEvaluationOperator(const TabularGame& game,
                                     const FactoredPolicy& policy,
                                     const BehaviorModel& mu, Temperatures temps,
                                     const GlobalQTable& q) {
  CheckShapes(game, policy, mu);
  const std::vector<double> v = SoftStateValues(game, policy, mu, temps, q);
  GlobalQTable out(game.num_states(), game.num_joint_actions());
  for (int s = 0; s < game.num_states(); ++s) {
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      double x = game.reward(s, a);
      for (const Transition& t : game.transitions(s, a)) {
        x += game.gamma() * t.prob * v[t.next_state];
      }
      out(s, a) = x;
    }
  }
  return out;
}

namespace {

double SupDiff(const GlobalQTable& a, const GlobalQTable& b) {
  double d = 0.0;
  for (size_t k = 0; k < a.values().size(); ++k) {
    d = std::max(d, std::abs(a.values()[k] - b.values()[k]));
  }
  return d;
}

}  // namespace

PolicyValue PolicyEvaluation(const TabularGame& game, const FactoredPolicy& policy,
                             const BehaviorModel& mu, Temperatures temps,
                             const EvaluationOptions& options) {
  CheckShapes(game, policy, mu);
  CheckSupport(policy, mu);
  const int S = game.num_states();
  const int J = game.num_joint_actions();
  PolicyValue out;
  if (options.method == EvaluationMethod::kIterative) {
    GlobalQTable q(S, J);
    for (int it = 1; it <= options.max_iters; ++it) {
      GlobalQTable next = ApplyEvaluationOperator(game, policy, mu, temps, q);
      const double delta = SupDiff(next, q);
      q = std::move(next);
      if (delta <= options.tol) {
        out.iterations = it;
        out.residual = delta;
        out.v = SoftStateValues(game, policy, mu, temps, q);
        out.q = std::move(q);
        return out;
      }
      out.residual = delta;
    }
    std::ostringstream msg;
    msg << "policy evaluation did not converge in " << options.max_iters
        << " iterations (residual " << out.residual << ")";
    throw NumericError(msg.str());
  }

  const std::vector<double> pi = JointTable(game, policy);
  const std::vector<double> pen = RegularizationPenalty(game, policy, mu, temps);
  std::vector<int> index(S, -1);
  int n = 0;
  for (int s = 0; s < S; ++s) {
    if (!game.is_terminal(s)) index[s] = n++;
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < S; ++s) {
    const int row = index[s];
    if (row < 0) continue;
    double rhs = -pen[s];
    for (int a = 0; a < J; ++a) {
      const double p = pi[static_cast<size_t>(s) * J + a];
      if (p == 0.0) continue;
      rhs += p * game.reward(s, a);
      for (const Transition& t : game.transitions(s, a)) {
        const int col = index[t.next_state];
        if (col >= 0) m(row, col) -= game.gamma() * p * t.prob;
      }
    }
    b(row) = rhs;
  }
  Eigen::VectorXd x = n > 0 ? Eigen::VectorXd(m.partialPivLu().solve(b))
                            : Eigen::VectorXd();
  std::vector<double> v(S, 0.0);
  for (int s = 0; s < S; ++s) {
    if (index[s] >= 0) v[s] = x(index[s]);
  }
  GlobalQTable q(S, J);
  for (int s = 0; s < S; ++s) {
    if (game.is_terminal(s)) continue;
    for (int a = 0; a < J; ++a) {
      double y = game.reward(s, a);
      for (const Transition& t : game.transitions(s, a)) {
        y += game.gamma() * t.prob * v[t.next_state];
      }
      q(s, a) = y;
    }
  }
  out.residual = SupDiff(ApplyEvaluationOperator(game, policy, mu, temps, q), q);
  if (!std::isfinite(out.residual) || out.residual > 1e-6) {
    std::ostringstream msg;
    msg << "direct policy evaluation is inaccurate (residual " << out.residual
        << ")";
    throw NumericError(msg.str());
  }
  out.iterations = 1;
  out.q = std::move(q);
  out.v = std::move(v);
  return out;
}

LocalQTable MarginalQ(const TabularGame& game, const GlobalQTable& q,
                      const FactoredPolicy& new_policy,
                      const FactoredPolicy& old_policy,
                      std::span<const int> updated_agents, int agent) {
  const int N = game.num_agents();
  if (agent < 0 || agent >= N) throw std::invalid_argument("agent out of range");
  std::vector<bool> is_new(N, false);
  for (int j : updated_agents) {
    if (j < 0 || j >= N) throw std::invalid_argument("updated agent out of range");
    if (j == agent || is_new[j]) {
      throw std::invalid_argument(
          "overlapping partitions: agent " + std::to_string(j) +
          " appears twice among updated agents and the agent being updated");
    }
    is_new[j] = true;
  }
  const JointActionSpace& space = game.joint();
  LocalQTable out(agent, game.num_states(), game.num_actions(agent));
  for (int s = 0; s < game.num_states(); ++s) {
    for (int a = 0; a < space.size(); ++a) {
      double w = 1.0;
      for (int j = 0; j < N && w != 0.0; ++j) {
        if (j == agent) continue;
        const FactoredPolicy& p = is_new[j] ? new_policy : old_policy;
        w *= p.Prob(j, s, space.ActionOf(a, j));
      }
      if (w != 0.0) out(s, space.ActionOf(a, agent)) += w * q(s, a);
    }
  }
  return out;
}

std::vector<double> ClosedFormUpdate(std::span<const double> local_q,
                                     std::span<const double> mu_row,
                                     Temperatures temps) {
  const double tau = temps.alpha + temps.beta;
  if (!(tau > 0.0)) throw std::invalid_argument("alpha + beta must be positive");
  if (local_q.size() != mu_row.size()) {
    throw std::invalid_argument("local Q and behavior rows differ in size");
  }
  const size_t n = mu_row.size();
  std::vector<double> logits(n, -std::numeric_limits<double>::infinity());
  double best = -std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < n; ++a) {
    if (!InSupport(mu_row[a])) continue;
    const double lm = std::log(mu_row[a]);
    logits[a] = lm + (local_q[a] - temps.beta * lm) / tau;
    best = std::max(best, logits[a]);
  }
  if (!std::isfinite(best)) {
    throw SupportError("behavior row has no support; cannot form a policy");
  }
  std::vector<double> out(n, 0.0);
  double z = 0.0;
  for (size_t a = 0; a < n; ++a) {
    if (!std::isfinite(logits[a])) continue;
    out[a] = std::exp(logits[a] - best);
    z += out[a];
  }
  for (double& p : out) p /= z;
  return out;
}

OrderMode ParseOrderMode(const std::string& name) {
  if (name == "random") return OrderMode::kRandom;
  if (name == "fixed") return OrderMode::kFixed;
  if (name == "semi-greedy" || name == "semi_greedy") return OrderMode::kSemiGreedy;
  throw ConfigError("unknown order mode '" + name +
                    "' (expected random, fixed or semi-greedy)");
}

std::string OrderModeName(OrderMode mode) {
  switch (mode) {
    case OrderMode::kRandom: return "random";
    case OrderMode::kFixed: return "fixed";
    case OrderMode::kSemiGreedy: return "semi-greedy";
  }
  return "random";
}

std::vector<std::vector<double>> KlToBehavior(const FactoredPolicy& policy,
                                              const BehaviorModel& mu) {
  std::vector<std::vector<double>> out(policy.num_agents());
  for (int i = 0; i < policy.num_agents(); ++i) {
    out[i].assign(policy.num_states(), 0.0);
    for (int s = 0; s < policy.num_states(); ++s) {
      std::span<const double> pi = policy.Row(i, s);
      std::span<const double> m = mu.factored.Row(i, s);
      double kl = 0.0;
      for (size_t a = 0; a < pi.size(); ++a) {
        if (pi[a] > 0.0) kl += pi[a] * (FlooredLog(pi[a]) - FlooredLog(m[a]));
      }
      out[i][s] = std::max(kl, 0.0);
    }
  }
  return out;
}

std::vector<double> JointEntropy(const FactoredPolicy& policy) {
  std::vector<double> out(policy.num_states(), 0.0);
  for (int s = 0; s < policy.num_states(); ++s) {
    for (int i = 0; i < policy.num_agents(); ++i) {
      for (double p : policy.Row(i, s)) {
        if (p > 0.0) out[s] -= p * FlooredLog(p);
      }
    }
  }
  return out;
}

std::vector<double> FixedPointResidual(const TabularGame& game,
                                       const FactoredPolicy& policy,
                                       const BehaviorModel& mu,
                                       Temperatures temps, const GlobalQTable& q) {
  std::vector<double> out(game.num_states(), 0.0);
  for (int i = 0; i < game.num_agents(); ++i) {
    LocalQTable lq = MarginalQ(game, q, policy, policy, {}, i);
    for (int s = 0; s < game.num_states(); ++s) {
      if (game.is_terminal(s)) continue;
      std::vector<double> br =
          ClosedFormUpdate(lq.Row(s), mu.factored.Row(i, s), temps);
      std::span<const double> pi = policy.Row(i, s);
      double tv = 0.0;
      for (size_t a = 0; a < br.size(); ++a) tv += std::abs(br[a] - pi[a]);
      out[s] = std::max(out[s], 0.5 * tv);
    }
  }
  return out;
}

ExactInspo::ExactInspo(const TabularGame& game, const BehaviorModel& mu,
                       ExactSolverConfig config)
    : game_(game),
      mu_(mu),
      config_(std::move(config)),
      order_rng_(DeriveSeed(config_.seed, kOrderStream)) {
  config_.schedule.Validate();
  if (config_.max_iterations < 0) throw ConfigError("iterations must be >= 0");
  policy_ = config_.initial_policy ? *config_.initial_policy : mu.factored;
  CheckShapes(game_, policy_, mu_);
  CheckSupport(policy_, mu_);
}

Temperatures ExactInspo::CurrentTemperatures() const {
  Temperatures t = config_.schedule.At(iteration_);
  if (config_.ablations.no_entropy) t.beta = 0.0;
  return t;
}

Temperatures ExactInspo::LastTemperatures() const {
  Temperatures t = config_.schedule.At(std::max(iteration_ - 1, 0));
  if (config_.ablations.no_entropy) t.beta = 0.0;
  return t;
}

std::vector<int> ExactInspo::DrawOrder(const GlobalQTable& q) {
  const int N = game_.num_agents();
  switch (config_.order) {
    case OrderMode::kRandom:
      return order_rng_.Permutation(N);
    case OrderMode::kFixed: {
      std::vector<int> order(N);
      std::iota(order.begin(), order.end(), 0);
      return order;
    }
    case OrderMode::kSemiGreedy: {
      const std::vector<double> d = mu_.StateDistribution();
      std::vector<double> score(N, 0.0);
      for (int i = 0; i < N; ++i) {
        LocalQTable lq = MarginalQ(game_, q, policy_, policy_, {}, i);
        for (int s = 0; s < game_.num_states(); ++s) {
          if (d[s] == 0.0) continue;
          std::span<const double> pi = policy_.Row(i, s);
          std::span<const double> m = mu_.factored.Row(i, s);
          double mean = 0.0;
          for (size_t a = 0; a < pi.size(); ++a) mean += pi[a] * lq(s, a);
          double best = -std::numeric_limits<double>::infinity();
          for (size_t a = 0; a < pi.size(); ++a) {
            if (InSupport(m[a])) best = std::max(best, lq(s, a) - mean);
          }
          score[i] += d[s] * best;
        }
      }
      std::vector<int> order(N);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int x, int y) { return score[x] > score[y]; });
      return order;
    }
  }
  return {};
}

void ExactInspo::Step() {
  const Temperatures temps = CurrentTemperatures();
  const FactoredPolicy old = policy_;
  const PolicyValue before =
      PolicyEvaluation(game_, old, mu_, temps, config_.evaluation);
  TraceRow row;
  row.iteration = iteration_;
  row.alpha = temps.alpha;
  row.beta = temps.beta;
  row.v_before = before.v;
  row.order = DrawOrder(before.q);

  FactoredPolicy next = old;
  const int S = game_.num_states();
  auto update_agent = [&](int i, const LocalQTable& lq) {
    for (int s = 0; s < S; ++s) {
      next.SetRow(i, s, ClosedFormUpdate(lq.Row(s), mu_.factored.Row(i, s), temps));
    }
  };
  if (config_.ablations.simultaneous) {
    std::vector<LocalQTable> locals;
    for (int i : row.order) {
      locals.push_back(MarginalQ(game_, before.q, old, old, {}, i));
    }
    for (size_t k = 0; k < row.order.size(); ++k) update_agent(row.order[k], locals[k]);
  } else {
    std::vector<int> updated;
    for (int i : row.order) {
      if (config_.reevaluate_each_agent && !updated.empty()) {
        const PolicyValue mid =
            PolicyEvaluation(game_, next, mu_, temps, config_.evaluation);
        update_agent(i, MarginalQ(game_, mid.q, next, next, {}, i));
      } else {
        update_agent(i, MarginalQ(game_, before.q, next, old, updated, i));
      }
      updated.push_back(i);
    }
  }

  const PolicyValue after =
      PolicyEvaluation(game_, next, mu_, temps, config_.evaluation);
  row.v = after.v;
  row.kl = KlToBehavior(next, mu_);
  row.entropy = JointEntropy(next);
  row.qre_residual = FixedPointResidual(game_, next, mu_, temps, after.q);
  row.policy_change = MaxTotalVariation(next, old);
  policy_ = std::move(next);
  trace_.rows.push_back(std::move(row));
  ++iteration_;
  converged_ = trace_.rows.back().policy_change < config_.policy_tol;
}

SolveResult InspoIterate(const TabularGame& game, const BehaviorModel& mu,
                         const ExactSolverConfig& config) {
  ExactInspo solver(game, mu, config);
  while (solver.iteration() < config.max_iterations && !solver.converged()) {
    solver.Step();
  }
  SolveResult out;
  out.policy = solver.policy();
  out.trace = solver.trace();
  out.converged = solver.converged();
  out.iterations = solver.iteration();
  return out;
}

double AdvantageDecompositionCheck(const TabularGame& game, const GlobalQTable& q,
                                   const FactoredPolicy& policy,
                                   std::span<const int> order) {
  const int N = game.num_agents();
  const JointActionSpace& space = game.joint();
  if (static_cast<int>(order.size()) != N) {
    throw std::invalid_argument("order must list every agent once");
  }
  std::vector<bool> seen(N, false);
  for (int i : order) {
    if (i < 0 || i >= N || seen[i]) {
      throw std::invalid_argument("order must be a permutation of the agents");
    }
    seen[i] = true;
  }
  double worst = 0.0;
  for (int s = 0; s < game.num_states(); ++s) {
    // prefix_value(a, n): expectation of Q with agents order[0..n) fixed to
    // their entries in a and the rest drawn from the policy.
    auto prefix_value = [&](int a, int n) {
      std::vector<bool> fixed(N, false);
      for (int k = 0; k < n; ++k) fixed[order[k]] = true;
      double total = 0.0;
      for (int b = 0; b < space.size(); ++b) {
        double w = 1.0;
        for (int j = 0; j < N && w != 0.0; ++j) {
          if (fixed[j]) {
            if (space.ActionOf(b, j) != space.ActionOf(a, j)) w = 0.0;
          } else {
            w *= policy.Prob(j, s, space.ActionOf(b, j));
          }
        }
        if (w != 0.0) total += w * q(s, b);
      }
      return total;
    };
    const double baseline = prefix_value(0, 0);
    for (int a = 0; a < space.size(); ++a) {
      const double joint_adv = q(s, a) - baseline;
      double sum = 0.0;
      double prev = baseline;
      for (int n = 1; n <= N; ++n) {
        const double cur = prefix_value(a, n);
        sum += cur - prev;
        prev = cur;
      }
      worst = std::max(worst, std::abs(joint_adv - sum));
    }
  }
  return worst;
}

}  // namespace inspo
