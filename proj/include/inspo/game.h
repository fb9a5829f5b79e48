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

#ifndef INSPO_GAME_H_
#define INSPO_GAME_H_

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace inspo {

// Probabilities below this floor are treated as out of support, and logs are
// taken of max(p, kProbFloor).
inline constexpr double kProbFloor = 1e-12;

inline double FlooredLog(double p) { return std::log(std::max(p, kProbFloor)); }
inline bool InSupport(double p) { return p >= kProbFloor; }

struct JointAction {
  std::vector<int> per_agent;
  int flat_index = 0;
};

// Mixed-radix indexing of joint actions; agent 0 is the most significant
// digit, so for two binary agents the order is (0,0),(0,1),(1,0),(1,1).
class JointActionSpace {
 public:
  JointActionSpace() = default;
  explicit JointActionSpace(std::vector<int> actions_per_agent);

  int num_agents() const { return static_cast<int>(radix_.size()); }
  int size() const { return size_; }
  int num_actions(int agent) const { return radix_.at(agent); }
  const std::vector<int>& radix() const { return radix_; }
  int stride(int agent) const { return strides_[agent]; }

  int Encode(std::span<const int> per_agent) const;
  std::vector<int> Decode(int flat) const;
  int ActionOf(int flat, int agent) const {
    return (flat / strides_[agent]) % radix_[agent];
  }
  // Same joint action with agent's digit replaced.
  int WithAction(int flat, int agent, int action) const {
    return flat + (action - ActionOf(flat, agent)) * strides_[agent];
  }

 private:
  std::vector<int> radix_;
  std::vector<int> strides_;
  int size_ = 0;
};

struct Transition {
  int next_state;
  double prob;
};

// A finite cooperative Markov game. Built once through the setters, then
// shared read-only.
class TabularGame {
 public:
  TabularGame(std::vector<int> actions_per_agent, int num_states, double gamma);

  int num_agents() const { return joint_.num_agents(); }
  int num_states() const { return num_states_; }
  int num_joint_actions() const { return joint_.size(); }
  int num_actions(int agent) const { return joint_.num_actions(agent); }
  const std::vector<int>& actions_per_agent() const { return joint_.radix(); }
  const JointActionSpace& joint() const { return joint_; }
  double gamma() const { return gamma_; }

  double reward(int s, int a) const { return reward_[Cell(s, a)]; }
  const std::vector<Transition>& transitions(int s, int a) const {
    return transition_[Cell(s, a)];
  }
  const std::vector<double>& initial_dist() const { return initial_dist_; }
  bool is_terminal(int s) const { return terminal_[s]; }
  std::vector<int> terminal_states() const;
  std::optional<int> horizon() const { return horizon_; }

  const std::vector<std::string>& state_labels() const { return state_labels_; }
  const std::vector<std::vector<std::string>>& action_labels() const {
    return action_labels_;
  }

  void set_reward(int s, int a, double r);
  void set_transitions(int s, int a, std::vector<Transition> next);
  void set_initial_dist(std::vector<double> d);
  void set_terminal(int s, bool terminal = true);
  void set_horizon(std::optional<int> horizon) { horizon_ = horizon; }
  void set_state_labels(std::vector<std::string> labels);
  void set_action_labels(std::vector<std::vector<std::string>> labels);

  // Stable hash of dimensions, gamma, rewards, transitions, initial
  // distribution and terminal set, as 16 hex digits.
  std::string Fingerprint() const;

 private:
  int Cell(int s, int a) const;

  JointActionSpace joint_;
  int num_states_;
  double gamma_;
  std::vector<double> reward_;
  std::vector<std::vector<Transition>> transition_;
  std::vector<double> initial_dist_;
  std::vector<bool> terminal_;
  std::optional<int> horizon_;
  std::vector<std::string> state_labels_;
  std::vector<std::vector<std::string>> action_labels_;
};

std::vector<JointAction> EnumerateJointActions(const TabularGame& game);

struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

ValidationReport ValidateGame(const TabularGame& game);

// Per-agent, per-state action distributions. The joint policy is the product.
class FactoredPolicy {
 public:
  FactoredPolicy() = default;
  // Uniform policy.
  FactoredPolicy(int num_states, std::vector<int> actions_per_agent);
  static FactoredPolicy Uniform(const TabularGame& game) {
    return FactoredPolicy(game.num_states(), game.actions_per_agent());
  }

  int num_agents() const { return static_cast<int>(actions_.size()); }
  int num_states() const { return num_states_; }
  int num_actions(int agent) const { return actions_.at(agent); }
  const std::vector<int>& actions_per_agent() const { return actions_; }

  std::span<const double> Row(int agent, int s) const;
  std::span<double> MutableRow(int agent, int s);
  void SetRow(int agent, int s, std::span<const double> row);
  double Prob(int agent, int s, int a) const { return Row(agent, s)[a]; }

  // Product of per-agent probabilities for a flat joint action.
  double JointProb(const JointActionSpace& space, int s, int flat) const;

  // Largest deviation of any row from summing to one, or of any entry below 0.
  double MaxRowError() const;

  bool operator==(const FactoredPolicy& other) const = default;

 private:
  int num_states_ = 0;
  std::vector<int> actions_;
  std::vector<std::vector<double>> tables_;
};

// prod_i pi^i(a^i | s); throws std::out_of_range on bad indices.
double JointPolicyProb(const FactoredPolicy& policy, int state,
                       const JointAction& action);

// Max over states and agents of the total-variation distance between rows.
double MaxTotalVariation(const FactoredPolicy& a, const FactoredPolicy& b);

class GlobalQTable {
 public:
  GlobalQTable() = default;
  GlobalQTable(int num_states, int num_joint_actions, double fill = 0.0)
      : num_states_(num_states),
        num_joint_(num_joint_actions),
        values_(static_cast<size_t>(num_states) * num_joint_actions, fill) {}

  int num_states() const { return num_states_; }
  int num_joint_actions() const { return num_joint_; }
  double& operator()(int s, int a) { return values_[s * num_joint_ + a]; }
  double operator()(int s, int a) const { return values_[s * num_joint_ + a]; }
  std::span<const double> Row(int s) const {
    return {values_.data() + s * num_joint_, static_cast<size_t>(num_joint_)};
  }
  const std::vector<double>& values() const { return values_; }

 private:
  int num_states_ = 0;
  int num_joint_ = 0;
  std::vector<double> values_;
};

class LocalQTable {
 public:
  LocalQTable() = default;
  LocalQTable(int agent, int num_states, int num_actions, double fill = 0.0)
      : agent_(agent),
        num_states_(num_states),
        num_actions_(num_actions),
        values_(static_cast<size_t>(num_states) * num_actions, fill) {}

  int agent() const { return agent_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double& operator()(int s, int a) { return values_[s * num_actions_ + a]; }
  double operator()(int s, int a) const { return values_[s * num_actions_ + a]; }
  std::span<const double> Row(int s) const {
    return {values_.data() + s * num_actions_,
            static_cast<size_t>(num_actions_)};
  }
  std::span<double> MutableRow(int s) {
    return {values_.data() + s * num_actions_,
            static_cast<size_t>(num_actions_)};
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  int agent_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> values_;
};

}  // namespace inspo

#endif  // INSPO_GAME_H_
