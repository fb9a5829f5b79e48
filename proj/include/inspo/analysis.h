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

#ifndef INSPO_ANALYSIS_H_
#define INSPO_ANALYSIS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "inspo/data.h"
#include "inspo/exact_solver.h"
#include "inspo/game.h"

namespace inspo {

// Unregularized state values of a policy from the linear fixed point
// V = r_pi + gamma P_pi V, ignoring any horizon.
std::vector<double> PolicyStateValues(const TabularGame& game,
                                      const FactoredPolicy& policy);

// Expected discounted return from the initial distribution.
double ExactReturn(const TabularGame& game, const FactoredPolicy& policy);

struct RolloutStats {
  int episodes = 0;
  // Discounted episode return.
  double mean = 0.0;
  double std = 0.0;
  double undiscounted_mean = 0.0;
  double undiscounted_std = 0.0;
};

// Monte Carlo returns over exactly n_episodes, truncated at the game
// horizon. Throws ConfigError if n_episodes < 1.
RolloutStats RolloutReturn(const TabularGame& game, const FactoredPolicy& policy,
                           int n_episodes = 32, uint64_t seed = 0);

struct QreResidualReport {
  // gap[agent][state] = V_BR(s) - V_pi(s) with teammates frozen.
  std::vector<std::vector<double>> gap;
  double max_gap = 0.0;
  int inner_iterations = 0;
};

// Regularized best response of each agent against frozen teammates, by soft
// value iteration. Throws NumericError if value iteration does not converge.
QreResidualReport QreResidual(const TabularGame& game,
                              const FactoredPolicy& policy,
                              const BehaviorModel& mu, Temperatures temps,
                              double tol = 1e-12, int max_iters = 1000000);

struct IgmFit {
  // rank[agent][k] is the action ranked k-th from the bottom.
  std::vector<std::vector<int>> rank;
  // Fitted Q over joint actions, flat-indexed.
  std::vector<double> q;
  double td_error = 0.0;
  std::vector<int> greedy_action;
};

struct IgmFitResult {
  std::vector<IgmFit> fits;  // one per ordering combination
  int best = 0;
  const IgmFit& best_fit() const { return fits[best]; }
};

// For every combination of per-agent action orderings, the least-squares fit
// of joint values that are nondecreasing in each agent's rank, weighted by
// the dataset at the single playing state (state 0). Requires a two-agent
// game with gamma = 0 at that state.
IgmFitResult IgmFailureDemo(const TabularGame& game,
                            const OfflineDataset& dataset);

struct MonotonicityViolation {
  int iteration = 0;
  int state = 0;
  double drop = 0.0;
};

// Every (iteration, state) where the value after the update falls below the
// value before it by more than tol.
std::vector<MonotonicityViolation> MonotonicityAudit(const SolverTrace& trace,
                                                     double tol = 1e-8);

}  // namespace inspo

#endif  // INSPO_ANALYSIS_H_
