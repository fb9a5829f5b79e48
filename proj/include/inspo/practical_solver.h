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

#ifndef INSPO_PRACTICAL_SOLVER_H_
#define INSPO_PRACTICAL_SOLVER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "inspo/data.h"
#include "inspo/exact_solver.h"
#include "inspo/game.h"
#include "inspo/rng.h"

namespace inspo {

// Tabular softmax policies. Logits of actions outside the behavior support
// at visited states are masked and never change.
struct SoftmaxPolicyParams {
  std::vector<LocalQTable> logits;
  std::vector<std::vector<bool>> mask;  // [agent][s * A + a], true if usable

  // Logits initialized to log mu^i, so the initial policy equals mu.
  static SoftmaxPolicyParams FromBehavior(const BehaviorModel& mu);
  std::vector<double> Probabilities(int agent, int s) const;
  FactoredPolicy ToPolicy() const;
};

struct ResampledDataset {
  const OfflineDataset* base = nullptr;
  std::vector<int> multiplicities;
  std::vector<double> rho_values;
  int size = 0;
};

struct AutoAlphaState {
  double alpha = 0.1;
  double target_kl = 0.18;
  double step_size = 0.01;
  double alpha_min = 1e-3;
  double alpha_max = 10.0;
};

enum class OptimizerKind { kAdam, kSgd };

// Per-parameter first-order optimizer state.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, size_t num_params, double learning_rate);
  void Apply(std::vector<double>& params, const std::vector<double>& grad);

 private:
  OptimizerKind kind_ = OptimizerKind::kAdam;
  double lr_ = 0.05;
  int t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

// Teammate ratio (pi^{-i}(a^{-i}|s) / mu^{-i}(a^{-i}|s))^{1/(N-1)}, with
// `teammates` holding the policy to use for every other agent. Returns 1
// for a single agent.
double ComputeRho(const FactoredPolicy& teammates, const BehaviorModel& mu,
                  const TransitionRecord& record, int agent);

// Multinomial draw of `size` records with probabilities proportional to
// weight * rho.
ResampledDataset Resample(const OfflineDataset& dataset,
                          std::vector<double> rho, int size, Rng& rng);
ResampledDataset Resample(const OfflineDataset& dataset,
                          std::vector<double> rho, int size, uint64_t seed);

// TD target r + gamma (1 - done) [E_{pi_old} Qbar(s',.) - alpha KL + beta H]
// for one record.
double TdTarget(const TransitionRecord& record, const LocalQTable& target,
                std::span<const double> pi_old_next,
                std::span<const double> mu_next, Temperatures temps,
                double gamma);

// Squared TD loss plus cql_weight * (logsumexp_a Q(s,a) - E_mu Q(s,.)),
// averaged over the resampled multiset; gradient is with respect to q.
LossAndGradient LocalQLoss(const LocalQTable& q, const LocalQTable& target,
                           const ResampledDataset& data,
                           const FactoredPolicy& pi_old, const BehaviorModel& mu,
                           Temperatures temps, double cql_weight, double gamma);

void LocalQStep(LocalQTable& q, const LocalQTable& target,
                const ResampledDataset& data, const FactoredPolicy& pi_old,
                const BehaviorModel& mu, Temperatures temps, double cql_weight,
                double gamma, Optimizer& optimizer);

void SoftTargetUpdate(LocalQTable& target, const LocalQTable& online, double tau);

// Per-record weights exp(clip((A - beta log mu) / (alpha + beta))) with
// A = Qbar(s,a) - E_{pi_old} Qbar(s,.).
std::vector<double> ExtractionWeights(const LocalQTable& target,
                                      const ResampledDataset& data,
                                      const FactoredPolicy& pi_old,
                                      const BehaviorModel& mu, Temperatures temps,
                                      double clip);

// Weighted negative log-likelihood of the agent's logits over the resampled
// multiset; gradient is with respect to the agent's logit table.
LossAndGradient ExtractionLoss(const SoftmaxPolicyParams& params, int agent,
                               const ResampledDataset& data,
                               std::span<const double> weights);

void PolicyExtractionStep(SoftmaxPolicyParams& params, int agent,
                          const ResampledDataset& data,
                          std::span<const double> weights, Optimizer& optimizer);

// alpha <- clamp(alpha + step * (sum_i KL_i - N * target)).
AutoAlphaState AutoAlphaStep(const AutoAlphaState& state,
                             std::span<const double> kl_per_agent);

struct PracticalConfig {
  TemperatureSchedule schedule;
  bool auto_alpha = false;
  AutoAlphaState auto_alpha_state;
  int max_iterations = 500;
  int inner_steps = 50;
  double learning_rate = 0.05;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double tau = 0.01;
  double cql_weight = 0.1;
  double exponent_clip = 20.0;
  // Resample size is max(record count, min_resample_size).
  int min_resample_size = 64;
  OrderMode order = OrderMode::kRandom;
  uint64_t seed = 0;
  Ablations ablations;
};

struct PracticalResult {
  FactoredPolicy policy;
  SolverTrace trace;
  std::vector<LocalQTable> local_q;
  double final_alpha = 0.0;
  int iterations = 0;
};

// Merges records with equal (s, a, r, s', done), summing weights.
OfflineDataset AggregateRecords(const OfflineDataset& dataset);

// Dataset-only InSPO: never touches rewards or dynamics of a game.
PracticalResult PracticalSolve(const OfflineDataset& dataset,
                               const BehaviorModel& mu, const GameShape& shape,
                               const PracticalConfig& config);

}  // namespace inspo

#endif  // INSPO_PRACTICAL_SOLVER_H_
