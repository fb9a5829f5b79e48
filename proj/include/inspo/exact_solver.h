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

#ifndef INSPO_EXACT_SOLVER_H_
#define INSPO_EXACT_SOLVER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inspo/data.h"
#include "inspo/game.h"
#include "inspo/rng.h"

namespace inspo {

struct Temperatures {
  double alpha = 0.1;
  double beta = 0.0;
};

// alpha is fixed; beta_k = beta0 * beta_decay^k.
struct TemperatureSchedule {
  double alpha = 0.1;
  double beta0 = 10.0;
  double beta_decay = 0.98;

  double BetaAt(int iteration) const;
  Temperatures At(int iteration) const { return {alpha, BetaAt(iteration)}; }
  // Throws ConfigError unless alpha > 0, beta0 >= 0, decay in (0, 1].
  void Validate() const;
};

enum class EvaluationMethod { kDirect, kIterative };

struct EvaluationOptions {
  EvaluationMethod method = EvaluationMethod::kDirect;
  double tol = 1e-10;
  int max_iters = 200000;
};

struct PolicyValue {
  GlobalQTable q;
  std::vector<double> v;
  // Sup-norm Bellman residual of the returned Q.
  double residual = 0.0;
  int iterations = 0;
};

// Throws SupportError if some agent puts mass on an action outside its
// behavior support at a visited state.
void CheckSupport(const FactoredPolicy& policy, const BehaviorModel& mu);

// Per-state sum over agents of E_pi^i[alpha log(pi^i/mu^i) + beta log pi^i].
std::vector<double> RegularizationPenalty(const TabularGame& game,
                                          const FactoredPolicy& policy,
                                          const BehaviorModel& mu,
                                          Temperatures temps);

// V(s) = E_pi[Q(s,.)] - penalty(s); zero at terminal states.
std::vector<double> SoftStateValues(const TabularGame& game,
                                    const FactoredPolicy& policy,
                                    const BehaviorModel& mu, Temperatures temps,
                                    const GlobalQTable& q);

// One application of the regularized evaluation operator:
// (T Q)(s,a) = r(s,a) + gamma * E_{s'}[V(s')].
GlobalQTable ApplyEvaluationOperator(const TabularGame& game,
                                     const FactoredPolicy& policy,
                                     const BehaviorModel& mu, Temperatures temps,
                                     const GlobalQTable& q);

// Fixed point of the evaluation operator. kDirect solves the linear system
// for V; kIterative applies the operator until the update is below tol and
// throws NumericError otherwise.
PolicyValue PolicyEvaluation(const TabularGame& game, const FactoredPolicy& policy,
                             const BehaviorModel& mu, Temperatures temps,
                             const EvaluationOptions& options = {});

// Q^{i}(s, a^i): expectation of Q over teammates, using new_policy for the
// agents in `updated_agents` and old_policy for everyone else.
LocalQTable MarginalQ(const TabularGame& game, const GlobalQTable& q,
                      const FactoredPolicy& new_policy,
                      const FactoredPolicy& old_policy,
                      std::span<const int> updated_agents, int agent);

// pi(a) proportional to mu(a) exp((Q(a) - beta log mu(a)) / (alpha + beta)),
// restricted to the support of mu.
std::vector<double> ClosedFormUpdate(std::span<const double> local_q,
                                     std::span<const double> mu_row,
                                     Temperatures temps);

enum class OrderMode { kRandom, kFixed, kSemiGreedy };

OrderMode ParseOrderMode(const std::string& name);
std::string OrderModeName(OrderMode mode);

struct Ablations {
  bool no_entropy = false;
  bool simultaneous = false;
};

struct TraceRow {
  int iteration = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<int> order;
  // Regularized values of the policy before and after this iteration, both
  // at this iteration's temperatures.
  std::vector<double> v_before;
  std::vector<double> v;
  // kl[agent][state] to the behavior marginal, after the update.
  std::vector<std::vector<double>> kl;
  // Joint entropy per state, after the update.
  std::vector<double> entropy;
  // Per state, the largest total-variation gap between an agent's row and
  // its closed-form response to the updated joint policy.
  std::vector<double> qre_residual;
  double policy_change = 0.0;
  // Practical runs only.
  double mean_rho = 1.0;
};

struct SolverTrace {
  std::vector<TraceRow> rows;
};

struct ExactSolverConfig {
  TemperatureSchedule schedule;
  int max_iterations = 500;
  OrderMode order = OrderMode::kRandom;
  uint64_t seed = 0;
  Ablations ablations;
  double policy_tol = 1e-8;
  // Re-evaluate Q after every single-agent update instead of once per
  // outer iteration.
  bool reevaluate_each_agent = false;
  EvaluationOptions evaluation;
  // Defaults to the behavior marginals.
  std::optional<FactoredPolicy> initial_policy;
};

struct SolveResult {
  FactoredPolicy policy;
  SolverTrace trace;
  bool converged = false;
  int iterations = 0;
};

// Stepwise form of the sequential exact solver.
class ExactInspo {
 public:
  ExactInspo(const TabularGame& game, const BehaviorModel& mu,
             ExactSolverConfig config);

  // Runs one outer iteration and appends a trace row.
  void Step();
  int iteration() const { return iteration_; }
  bool converged() const { return converged_; }
  const FactoredPolicy& policy() const { return policy_; }
  const SolverTrace& trace() const { return trace_; }
  // Temperatures of the next (or, after the final step, the last) iteration.
  Temperatures CurrentTemperatures() const;
  Temperatures LastTemperatures() const;

 private:
  std::vector<int> DrawOrder(const GlobalQTable& q);

  const TabularGame& game_;
  const BehaviorModel& mu_;
  ExactSolverConfig config_;
  FactoredPolicy policy_;
  SolverTrace trace_;
  Rng order_rng_;
  int iteration_ = 0;
  bool converged_ = false;
};

SolveResult InspoIterate(const TabularGame& game, const BehaviorModel& mu,
                         const ExactSolverConfig& config);

// Max over (s, a) of |A(s,a) - sum_n A^{i_n}(s, a^{i_1..i_{n-1}}, a^{i_n})|,
// with the marginals computed by brute force.
double AdvantageDecompositionCheck(const TabularGame& game, const GlobalQTable& q,
                                   const FactoredPolicy& policy,
                                   std::span<const int> order);

// Summary statistics shared with the practical solver.
std::vector<std::vector<double>> KlToBehavior(const FactoredPolicy& policy,
                                              const BehaviorModel& mu);
std::vector<double> JointEntropy(const FactoredPolicy& policy);
// Fixed-point gap of each state: max over agents of TV(pi^i, closed-form
// response to the marginal of q).
std::vector<double> FixedPointResidual(const TabularGame& game,
                                       const FactoredPolicy& policy,
                                       const BehaviorModel& mu,
                                       Temperatures temps, const GlobalQTable& q);

}  // namespace inspo

#endif  // INSPO_EXACT_SOLVER_H_
