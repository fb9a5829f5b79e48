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

#include "inspo/game.h"

#include <cstdint>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "inspo/errors.h"

namespace inspo {

JointActionSpace::JointActionSpace(std::vector<int> actions_per_agent)
    : radix_(std::move(actions_per_agent)) {
  if (radix_.empty()) throw ConfigError("a game needs at least one agent");
  strides_.assign(radix_.size(), 1);
  size_ = 1;
  for (int i = num_agents() - 1; i >= 0; --i) {
    if (radix_[i] <= 0) throw ConfigError("every agent needs an action");
    strides_[i] = size_;
    size_ *= radix_[i];
  }
}

int JointActionSpace::Encode(std::span<const int> per_agent) const {
  if (static_cast<int>(per_agent.size()) != num_agents()) {
    throw std::out_of_range("joint action has wrong number of agents");
  }
  int flat = 0;
  for (int i = 0; i < num_agents(); ++i) {
    if (per_agent[i] < 0 || per_agent[i] >= radix_[i]) {
      throw std::out_of_range("action index out of range for agent " +
                              std::to_string(i));
    }
    flat += per_agent[i] * strides_[i];
  }
  return flat;
}

std::vector<int> JointActionSpace::Decode(int flat) const {
  if (flat < 0 || flat >= size_) {
    throw std::out_of_range("flat joint action out of range");
  }
  std::vector<int> out(num_agents());
  for (int i = 0; i < num_agents(); ++i) out[i] = ActionOf(flat, i);
  return out;
}

TabularGame::TabularGame(std::vector<int> actions_per_agent, int num_states,
                         double gamma)
    : joint_(std::move(actions_per_agent)),
      num_states_(num_states),
      gamma_(gamma) {
  if (num_states <= 0) throw ConfigError("a game needs at least one state");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("gamma must lie in [0, 1)");
  }
  const size_t cells = static_cast<size_t>(num_states) * joint_.size();
  reward_.assign(cells, 0.0);
  transition_.assign(cells, {});
  initial_dist_.assign(num_states, 0.0);
  initial_dist_[0] = 1.0;
  terminal_.assign(num_states, false);
  state_labels_.resize(num_states);
  for (int s = 0; s < num_states; ++s) state_labels_[s] = std::to_string(s);
  action_labels_.resize(num_agents());
  for (int i = 0; i < num_agents(); ++i) {
    for (int a = 0; a < num_actions(i); ++a) {
      action_labels_[i].push_back(std::to_string(a));
    }
  }
}

int TabularGame::Cell(int s, int a) const {
  if (s < 0 || s >= num_states_ || a < 0 || a >= joint_.size()) {
    throw std::out_of_range("state or joint action out of range");
  }
  return s * joint_.size() + a;
}

std::vector<int> TabularGame::terminal_states() const {
  std::vector<int> out;
  for (int s = 0; s < num_states_; ++s) {
    if (terminal_[s]) out.push_back(s);
  }
  return out;
}

void TabularGame::set_reward(int s, int a, double r) { reward_[Cell(s, a)] = r; }

void TabularGame::set_transitions(int s, int a, std::vector<Transition> next) {
  for (const Transition& t : next) {
    if (t.next_state < 0 || t.next_state >= num_states_) {
      throw std::out_of_range("transition target out of range");
    }
  }
  transition_[Cell(s, a)] = std::move(next);
}

void TabularGame::set_initial_dist(std::vector<double> d) {
  if (static_cast<int>(d.size()) != num_states_) {
    throw ConfigError("initial distribution has wrong length");
  }
  initial_dist_ = std::move(d);
}

void TabularGame::set_terminal(int s, bool terminal) {
  if (s < 0 || s >= num_states_) throw std::out_of_range("state out of range");
  terminal_[s] = terminal;
}

void TabularGame::set_state_labels(std::vector<std::string> labels) {
  if (static_cast<int>(labels.size()) != num_states_) {
    throw ConfigError("state label count does not match state count");
  }
  state_labels_ = std::move(labels);
}

void TabularGame::set_action_labels(
    std::vector<std::vector<std::string>> labels) {
  if (static_cast<int>(labels.size()) != num_agents()) {
    throw ConfigError("action label lists do not match agent count");
  }
  for (int i = 0; i < num_agents(); ++i) {
    if (static_cast<int>(labels[i].size()) != num_actions(i)) {
      throw ConfigError("action label count mismatch for agent " +
                        std::to_string(i));
    }
  }
  action_labels_ = std::move(labels);
}

namespace {

class Fnv1a {
 public:
  void Add(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void AddInt(int64_t v) { Add(&v, sizeof(v)); }
  // Doubles are hashed through their bit pattern, with -0 folded into 0.
  void AddDouble(double v) {
    if (v == 0.0) v = 0.0;
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    Add(&bits, sizeof(bits));
  }
  uint64_t value() const { return hash_; }

 private:
  uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::string TabularGame::Fingerprint() const {
  Fnv1a h;
  h.AddInt(num_agents());
  for (int n : actions_per_agent()) h.AddInt(n);
  h.AddInt(num_states_);
  h.AddDouble(gamma_);
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < joint_.size(); ++a) {
      h.AddDouble(reward(s, a));
      std::vector<Transition> row = transitions(s, a);
      std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) {
        return x.next_state < y.next_state;
      });
      for (const Transition& t : row) {
        if (t.prob == 0.0) continue;
        h.AddInt(t.next_state);
        h.AddDouble(t.prob);
      }
      h.AddInt(-1);
    }
  }
  for (double p : initial_dist_) h.AddDouble(p);
  for (int s = 0; s < num_states_; ++s) h.AddInt(terminal_[s] ? 1 : 0);
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h.value();
  return out.str();
}

std::vector<JointAction> EnumerateJointActions(const TabularGame& game) {
  const JointActionSpace& space = game.joint();
  std::vector<JointAction> out;
  out.reserve(space.size());
  for (int flat = 0; flat < space.size(); ++flat) {
    out.push_back({space.Decode(flat), flat});
  }
  return out;
}

ValidationReport ValidateGame(const TabularGame& game) {
  constexpr double kTol = 1e-9;
  ValidationReport report;
  auto add = [&report](const std::string& msg) {
    report.issues.push_back(msg);
  };
  for (int s = 0; s < game.num_states(); ++s) {
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      const std::string where =
          "state " + std::to_string(s) + ", joint action " + std::to_string(a);
      if (!std::isfinite(game.reward(s, a))) add("non-finite reward at " + where);
      double total = 0.0;
      for (const Transition& t : game.transitions(s, a)) {
        if (t.prob < 0.0) {
          add("negative transition probability " + std::to_string(t.prob) +
              " at " + where + " to state " + std::to_string(t.next_state));
        }
        total += t.prob;
      }
      if (std::abs(total - 1.0) > kTol) {
        add("transition row sums to " + std::to_string(total) + " at " + where);
      }
      if (game.is_terminal(s)) {
        bool self_loop = game.transitions(s, a).size() >= 1;
        for (const Transition& t : game.transitions(s, a)) {
          if (t.prob > 0.0 && t.next_state != s) self_loop = false;
        }
        if (!self_loop) add("terminal state does not self-loop at " + where);
        if (game.reward(s, a) != 0.0) add("terminal reward is nonzero at " + where);
      }
    }
  }
  double total = 0.0;
  for (int s = 0; s < game.num_states(); ++s) {
    double p = game.initial_dist()[s];
    if (p < 0.0) add("negative initial probability at state " + std::to_string(s));
    total += p;
  }
  if (std::abs(total - 1.0) > kTol) {
    add("initial distribution sums to " + std::to_string(total));
  }
  return report;
}

FactoredPolicy::FactoredPolicy(int num_states, std::vector<int> actions_per_agent)
    : num_states_(num_states), actions_(std::move(actions_per_agent)) {
  tables_.resize(actions_.size());
  for (size_t i = 0; i < actions_.size(); ++i) {
    tables_[i].assign(static_cast<size_t>(num_states) * actions_[i],
                      1.0 / actions_[i]);
  }
}

std::span<const double> FactoredPolicy::Row(int agent, int s) const {
  if (agent < 0 || agent >= num_agents() || s < 0 || s >= num_states_) {
    throw std::out_of_range("policy row index out of range");
  }
  const int n = actions_[agent];
  return {tables_[agent].data() + static_cast<size_t>(s) * n,
          static_cast<size_t>(n)};
}

std::span<double> FactoredPolicy::MutableRow(int agent, int s) {
  if (agent < 0 || agent >= num_agents() || s < 0 || s >= num_states_) {
    throw std::out_of_range("policy row index out of range");
  }
  const int n = actions_[agent];
  return {tables_[agent].data() + static_cast<size_t>(s) * n,
          static_cast<size_t>(n)};
}

void FactoredPolicy::SetRow(int agent, int s, std::span<const double> row) {
  std::span<double> dst = MutableRow(agent, s);
  if (row.size() != dst.size()) throw std::invalid_argument("row size mismatch");
  std::copy(row.begin(), row.end(), dst.begin());
}

double FactoredPolicy::JointProb(const JointActionSpace& space, int s,
                                 int flat) const {
  double p = 1.0;
  for (int i = 0; i < num_agents(); ++i) {
    p *= tables_[i][static_cast<size_t>(s) * actions_[i] +
                    space.ActionOf(flat, i)];
  }
  return p;
}

double FactoredPolicy::MaxRowError() const {
  double worst = 0.0;
  for (int i = 0; i < num_agents(); ++i) {
    for (int s = 0; s < num_states_; ++s) {
      double total = 0.0;
      for (double p : Row(i, s)) {
        if (p < 0.0) worst = std::max(worst, -p);
        total += p;
      }
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return worst;
}

double JointPolicyProb(const FactoredPolicy& policy, int state,
                       const JointAction& action) {
  if (static_cast<int>(action.per_agent.size()) != policy.num_agents()) {
    throw std::out_of_range("joint action has wrong number of agents");
  }
  double p = 1.0;
  for (int i = 0; i < policy.num_agents(); ++i) {
    std::span<const double> row = policy.Row(i, state);
    const int a = action.per_agent[i];
    if (a < 0 || a >= static_cast<int>(row.size())) {
      throw std::out_of_range("action index out of range");
    }
    p *= row[a];
  }
  return p;
}

double MaxTotalVariation(const FactoredPolicy& a, const FactoredPolicy& b) {
  if (a.num_states() != b.num_states() ||
      a.actions_per_agent() != b.actions_per_agent()) {
    throw std::invalid_argument("policies have different shapes");
  }
  double worst = 0.0;
  for (int i = 0; i < a.num_agents(); ++i) {
    for (int s = 0; s < a.num_states(); ++s) {
      std::span<const double> x = a.Row(i, s);
      std::span<const double> y = b.Row(i, s);
      double tv = 0.0;
      for (size_t k = 0; k < x.size(); ++k) tv += std::abs(x[k] - y[k]);
      worst = std::max(worst, 0.5 * tv);
    }
  }
  return worst;
}

}  // namespace inspo
