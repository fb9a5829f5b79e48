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

#ifndef INSPO_DATA_H_
#define INSPO_DATA_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "inspo/environments.h"
#include "inspo/game.h"

namespace inspo {

// Dimensions a learner may know without access to rewards or dynamics.
struct GameShape {
  int num_states = 0;
  std::vector<int> actions_per_agent;
  double gamma = 0.0;

  int num_agents() const { return static_cast<int>(actions_per_agent.size()); }
};

GameShape ShapeOf(const TabularGame& game);

struct TransitionRecord {
  int state = 0;
  JointAction joint_action;
  double reward = 0.0;
  int next_state = 0;
  bool done = false;
  double weight = 1.0;
  int trajectory_id = 0;
  int step_index = 0;

  bool operator==(const TransitionRecord& o) const {
    return state == o.state && joint_action.per_agent == o.joint_action.per_agent &&
           joint_action.flat_index == o.joint_action.flat_index &&
           reward == o.reward && next_state == o.next_state && done == o.done &&
           weight == o.weight && trajectory_id == o.trajectory_id &&
           step_index == o.step_index;
  }
};

struct OfflineDataset {
  std::vector<TransitionRecord> records;
  std::string game_fingerprint;
  std::string generation_spec;

  int num_trajectories() const;
};

// Weighted empirical behavior. `joint` and `counts` are indexed
// [s * num_joint_actions + a]. Unvisited states get uniform rows.
struct BehaviorModel {
  GameShape shape;
  JointActionSpace space;
  FactoredPolicy factored;
  std::vector<double> joint;
  std::vector<double> counts;
  std::vector<double> state_weight;
  std::vector<bool> visited;

  double Joint(int s, int a) const {
    return joint[static_cast<size_t>(s) * space.size() + a];
  }
  // mu^{-i}(a^{-i}|s), the joint with agent i's action summed out.
  double TeammateMarginal(int s, int flat, int agent) const;
  // Dataset state distribution (normalized weights).
  std::vector<double> StateDistribution() const;
  int num_unvisited() const;
};

// Single-state dataset holding exactly the given joint-action mixture.
// Weights are normalized to sum to one.
OfflineDataset MakeMatrixDataset(
    const TabularGame& game,
    const std::vector<std::pair<std::vector<int>, double>>& joint_action_weights,
    const std::string& generation_spec = "matrix");

// Named matrix mixtures: xor-a, xor-b, xor-c, mne-balanced, mne-imbalanced.
std::vector<std::pair<std::vector<int>, double>> MatrixPresetWeights(
    const std::string& variant);
bool IsMatrixPreset(const std::string& variant);
bool IsBridgePreset(const std::string& variant);

// Samples n_episodes from the start distribution. Episodes end at a terminal
// state or after the game horizon. Weight 1 per record.
OfflineDataset RolloutTrajectories(const TabularGame& game,
                                   const FactoredPolicy& policy, int n_episodes,
                                   uint64_t seed);

// Each episode first draws one component policy by `mixture`, then follows it.
OfflineDataset RolloutMixture(const TabularGame& game,
                              const std::vector<FactoredPolicy>& components,
                              const std::vector<double>& mixture,
                              int n_episodes, uint64_t seed);

// Appends b's records to a with trajectory ids shifted past a's.
OfflineDataset Concatenate(const OfflineDataset& a, const OfflineDataset& b);

// bridge-optimal: 500 episodes from the equal mixture of the two expert
// policies. bridge-mixed: those plus 500 uniform-random episodes.
OfflineDataset MakeBridgeDataset(const TabularGame& game,
                                 const BridgeLayout& layout,
                                 const std::string& variant, uint64_t seed);

BehaviorModel EstimateBehavior(const OfflineDataset& dataset,
                               const GameShape& shape);

// First line is a header with the game fingerprint and generation spec; each
// following line is one record with fields s, a, r, s_next, done, w, traj, t.
void SaveDataset(const OfflineDataset& dataset, const std::string& path);
OfflineDataset LoadDataset(const std::string& path, const TabularGame& game);

}  // namespace inspo

#endif  // INSPO_DATA_H_
