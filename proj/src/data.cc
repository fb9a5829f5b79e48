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

#include "inspo/data.h"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "inspo/errors.h"
#include "inspo/rng.h"

namespace inspo {

using nlohmann::json;

namespace {

constexpr int kDefaultEpisodeCap = 1000;
constexpr int kBridgeEpisodes = 500;

}  // namespace

GameShape ShapeOf(const TabularGame& game) {
  return {game.num_states(), game.actions_per_agent(), game.gamma()};
}

int OfflineDataset::num_trajectories() const {
  std::set<int> ids;
  for (const auto& r : records) ids.insert(r.trajectory_id);
  return static_cast<int>(ids.size());
}

double BehaviorModel::TeammateMarginal(int s, int flat, int agent) const {
  double total = 0.0;
  for (int b = 0; b < space.num_actions(agent); ++b) {
    total += Joint(s, space.WithAction(flat, agent, b));
  }
  return total;
}

std::vector<double> BehaviorModel::StateDistribution() const {
  double total = 0.0;
  for (double w : state_weight) total += w;
  std::vector<double> out(state_weight.size(), 0.0);
  if (total > 0.0) {
    for (size_t s = 0; s < out.size(); ++s) out[s] = state_weight[s] / total;
  }
  return out;
}

int BehaviorModel::num_unvisited() const {
  int n = 0;
  for (bool v : visited) n += v ? 0 : 1;
  return n;
}

OfflineDataset MakeMatrixDataset(
    const TabularGame& game,
    const std::vector<std::pair<std::vector<int>, double>>& joint_action_weights,
    const std::string& generation_spec) {
  if (joint_action_weights.empty()) {
    throw ConfigError("matrix dataset needs at least one weighted joint action");
  }
  double total = 0.0;
  for (const auto& [action, w] : joint_action_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("matrix dataset weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("matrix dataset weights are all zero");
  OfflineDataset out;
  out.game_fingerprint = game.Fingerprint();
  out.generation_spec = generation_spec;
  int traj = 0;
  for (const auto& [action, w] : joint_action_weights) {
    if (w == 0.0) continue;
    int flat;
    try {
      flat = game.joint().Encode(action);
    } catch (const std::out_of_range&) {
      throw ConfigError("joint action outside the game in matrix dataset");
    }
    TransitionRecord r;
    r.state = 0;
    r.joint_action = {action, flat};
    r.reward = game.reward(0, flat);
    const auto& next = game.transitions(0, flat);
    r.next_state = next.empty() ? 0 : next.front().next_state;
    r.done = game.is_terminal(r.next_state);
    r.weight = w / total;
    r.trajectory_id = traj++;
    r.step_index = 0;
    out.records.push_back(std::move(r));
  }
  return out;
}

std::vector<std::pair<std::vector<int>, double>> MatrixPresetWeights(
    const std::string& variant) {
  const double third = 1.0 / 3.0;
  if (variant == "xor-a") return {{{0, 1}, 0.5}, {{1, 0}, 0.5}};
  if (variant == "xor-b") {
    return {{{0, 0}, third}, {{0, 1}, third}, {{1, 0}, third}};
  }
  if (variant == "xor-c") {
    return {{{0, 0}, 0.25}, {{0, 1}, 0.25}, {{1, 0}, 0.25}, {{1, 1}, 0.25}};
  }
  std::vector<double> marginal;
  if (variant == "mne-balanced") marginal = {third, third, third};
  if (variant == "mne-imbalanced") marginal = {0.8, 0.1, 0.1};
  if (marginal.empty()) throw ConfigError("unknown matrix preset '" + variant + "'");
  std::vector<std::pair<std::vector<int>, double>> out;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) out.push_back({{a, b}, marginal[a] * marginal[b]});
  }
  return out;
}

bool IsMatrixPreset(const std::string& v) {
  return v == "xor-a" || v == "xor-b" || v == "xor-c" || v == "mne-balanced" ||
         v == "mne-imbalanced";
}

bool IsBridgePreset(const std::string& v) {
  return v == "bridge-optimal" || v == "bridge-mixed";
}

namespace {

int SampleNext(const TabularGame& game, int s, int a, Rng& rng) {
  const auto& next = game.transitions(s, a);
  std::vector<double> p;
  p.reserve(next.size());
  for (const Transition& t : next) p.push_back(t.prob);
  return next[rng.Categorical(p)].next_state;
}

void RunEpisode(const TabularGame& game, const FactoredPolicy& policy,
                int trajectory_id, Rng& rng, OfflineDataset& out) {
  const int cap = game.horizon().value_or(kDefaultEpisodeCap);
  int s = rng.Categorical(game.initial_dist());
  std::vector<int> per_agent(game.num_agents());
  for (int t = 0; t < cap && !game.is_terminal(s); ++t) {
    for (int i = 0; i < game.num_agents(); ++i) {
      per_agent[i] = rng.Categorical(policy.Row(i, s));
    }
    const int flat = game.joint().Encode(per_agent);
    TransitionRecord r;
    r.state = s;
    r.joint_action = {per_agent, flat};
    r.reward = game.reward(s, flat);
    r.next_state = SampleNext(game, s, flat, rng);
    r.done = game.is_terminal(r.next_state);
    r.weight = 1.0;
    r.trajectory_id = trajectory_id;
    r.step_index = t;
    s = r.next_state;
    out.records.push_back(std::move(r));
  }
}

}  // namespace

OfflineDataset RolloutTrajectories(const TabularGame& game,
                                   const FactoredPolicy& policy, int n_episodes,
                                   uint64_t seed) {
  return RolloutMixture(game, {policy}, {1.0}, n_episodes, seed);
}

OfflineDataset RolloutMixture(const TabularGame& game,
                              const std::vector<FactoredPolicy>& components,
                              const std::vector<double>& mixture,
                              int n_episodes, uint64_t seed) {
  if (components.empty() || components.size() != mixture.size()) {
    throw ConfigError("mixture needs one weight per component policy");
  }
  for (const auto& p : components) {
    if (p.num_states() != game.num_states() ||
        p.actions_per_agent() != game.actions_per_agent()) {
      throw ConfigError("policy shape does not match the game");
    }
  }
  OfflineDataset out;
  out.game_fingerprint = game.Fingerprint();
  std::ostringstream spec;
  spec << "rollout episodes=" << n_episodes << " seed=" << seed
       << " components=" << components.size();
  out.generation_spec = spec.str();
  Rng rng(seed);
  for (int e = 0; e < n_episodes; ++e) {
    const int k = components.size() == 1 ? 0 : rng.Categorical(mixture);
    RunEpisode(game, components[k], e, rng, out);
  }
  return out;
}

OfflineDataset Concatenate(const OfflineDataset& a, const OfflineDataset& b) {
  if (!a.game_fingerprint.empty() && !b.game_fingerprint.empty() &&
      a.game_fingerprint != b.game_fingerprint) {
    throw ConfigError("cannot concatenate datasets of different games");
  }
  OfflineDataset out = a;
  int offset = 0;
  for (const auto& r : a.records) offset = std::max(offset, r.trajectory_id + 1);
  for (TransitionRecord r : b.records) {
    r.trajectory_id += offset;
    out.records.push_back(std::move(r));
  }
  if (out.game_fingerprint.empty()) out.game_fingerprint = b.game_fingerprint;
  out.generation_spec = a.generation_spec + " + " + b.generation_spec;
  return out;
}

OfflineDataset MakeBridgeDataset(const TabularGame& game,
                                 const BridgeLayout& layout,
                                 const std::string& variant, uint64_t seed) {
  if (!IsBridgePreset(variant)) {
    throw ConfigError("unknown bridge preset '" + variant + "'");
  }
  auto experts = BridgeExpertPolicies(game, layout);
  OfflineDataset data =
      RolloutMixture(game, {experts[0], experts[1]}, {0.5, 0.5}, kBridgeEpisodes,
                     DeriveSeed(seed, 1));
  if (variant == "bridge-mixed") {
    data = Concatenate(data, RolloutTrajectories(game, FactoredPolicy::Uniform(game),
                                                 kBridgeEpisodes,
                                                 DeriveSeed(seed, 2)));
  }
  data.generation_spec = variant + " seed=" + std::to_string(seed);
  return data;
}

BehaviorModel EstimateBehavior(const OfflineDataset& dataset,
                               const GameShape& shape) {
  if (dataset.records.empty()) {
    throw ConfigError("cannot estimate behavior from an empty dataset");
  }
  BehaviorModel mu;
  mu.shape = shape;
  mu.space = JointActionSpace(shape.actions_per_agent);
  const int S = shape.num_states;
  const int J = mu.space.size();
  const int N = shape.num_agents();
  mu.counts.assign(static_cast<size_t>(S) * J, 0.0);
  mu.state_weight.assign(S, 0.0);
  for (const auto& r : dataset.records) {
    if (r.state < 0 || r.state >= S || r.joint_action.flat_index < 0 ||
        r.joint_action.flat_index >= J) {
      throw ConfigError("dataset record outside the game's state/action range");
    }
    if (!(r.weight > 0.0)) throw ConfigError("dataset record has nonpositive weight");
    mu.counts[static_cast<size_t>(r.state) * J + r.joint_action.flat_index] +=
        r.weight;
    mu.state_weight[r.state] += r.weight;
  }
  mu.factored = FactoredPolicy(S, shape.actions_per_agent);
  mu.joint.assign(static_cast<size_t>(S) * J, 1.0 / J);
  mu.visited.assign(S, false);
  for (int s = 0; s < S; ++s) {
    const double total = mu.state_weight[s];
    if (total <= 0.0) continue;
    mu.visited[s] = true;
    std::vector<std::vector<double>> marg(N);
    for (int i = 0; i < N; ++i) marg[i].assign(mu.space.num_actions(i), 0.0);
    for (int a = 0; a < J; ++a) {
      const double p = mu.counts[static_cast<size_t>(s) * J + a] / total;
      mu.joint[static_cast<size_t>(s) * J + a] = p;
      for (int i = 0; i < N; ++i) marg[i][mu.space.ActionOf(a, i)] += p;
    }
    for (int i = 0; i < N; ++i) mu.factored.SetRow(i, s, marg[i]);
  }
  return mu;
}

void SaveDataset(const OfflineDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file " + path);
  json header;
  header["fingerprint"] = dataset.game_fingerprint;
  header["spec"] = dataset.generation_spec;
  header["records"] = dataset.records.size();
  out << header.dump() << "\n";
  for (const auto& r : dataset.records) {
    json line;
    line["s"] = r.state;
    line["a"] = r.joint_action.per_agent;
    line["r"] = r.reward;
    line["s_next"] = r.next_state;
    line["done"] = r.done;
    line["w"] = r.weight;
    line["traj"] = r.trajectory_id;
    line["t"] = r.step_index;
    out << line.dump() << "\n";
  }
}

OfflineDataset LoadDataset(const std::string& path, const TabularGame& game) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file " + path);
  OfflineDataset out;
  std::string text;
  int line_no = 0;
  auto parse = [&](const std::string& t) {
    try {
      return json::parse(t);
    } catch (const json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": malformed line: " + e.what());
    }
  };
  if (!std::getline(in, text)) throw ConfigError(path + ": empty dataset file");
  line_no = 1;
  json header = parse(text);
  if (!header.is_object() || !header.contains("fingerprint")) {
    throw ConfigError(path + ":1: missing header with game fingerprint");
  }
  out.game_fingerprint = header["fingerprint"].get<std::string>();
  out.generation_spec = header.value("spec", "");
  const std::string expected = game.Fingerprint();
  if (out.game_fingerprint != expected) {
    throw ConfigError(path + ": fingerprint mismatch: dataset was generated for "
                      "game " + out.game_fingerprint +
                      " but the supplied game is " + expected);
  }
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    json line = parse(text);
    auto field = [&](const char* key) -> const json& {
      if (!line.is_object() || !line.contains(key)) {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": missing field '" + key + "'");
      }
      return line.at(key);
    };
    try {
      TransitionRecord r;
      r.state = field("s").get<int>();
      r.joint_action.per_agent = field("a").get<std::vector<int>>();
      r.reward = field("r").get<double>();
      r.next_state = field("s_next").get<int>();
      r.done = field("done").get<bool>();
      r.weight = field("w").get<double>();
      r.trajectory_id = field("traj").get<int>();
      r.step_index = field("t").get<int>();
      if (r.state < 0 || r.state >= game.num_states() || r.next_state < 0 ||
          r.next_state >= game.num_states()) {
        throw ConfigError("state index out of range");
      }
      r.joint_action.flat_index = game.joint().Encode(r.joint_action.per_agent);
      if (!(r.weight > 0.0)) throw ConfigError("weight must be positive");
      if (r.done && !game.is_terminal(r.next_state)) {
        throw ConfigError("done record does not lead to a terminal state");
      }
      out.records.push_back(std::move(r));
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind(path, 0) == 0) throw;
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + msg);
    } catch (const std::exception& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": invalid record: " + e.what());
    }
  }
  return out;
}

}  // namespace inspo
