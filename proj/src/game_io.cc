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

#include "inspo/game_io.h"

#include <fstream>

#include "inspo/errors.h"

namespace inspo {

using nlohmann::json;

json GameToJson(const TabularGame& game) {
  json doc;
  doc["n_agents"] = game.num_agents();
  doc["gamma"] = game.gamma();
  doc["states"] = game.state_labels();
  doc["actions"] = game.actions_per_agent();
  doc["action_labels"] = game.action_labels();
  json reward = json::array();
  json transition = json::array();
  for (int s = 0; s < game.num_states(); ++s) {
    json r_row = json::array();
    json t_row = json::array();
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      r_row.push_back(game.reward(s, a));
      std::vector<double> dense(game.num_states(), 0.0);
      for (const Transition& t : game.transitions(s, a)) {
        dense[t.next_state] += t.prob;
      }
      t_row.push_back(dense);
    }
    reward.push_back(std::move(r_row));
    transition.push_back(std::move(t_row));
  }
  doc["reward"] = std::move(reward);
  doc["transition"] = std::move(transition);
  doc["initial_dist"] = game.initial_dist();
  doc["terminal"] = game.terminal_states();
  if (game.horizon()) doc["horizon"] = *game.horizon();
  return doc;
}

namespace {

const json& Require(const json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw ConfigError(std::string("game document is missing key '") + key + "'");
  }
  return doc.at(key);
}

}  // namespace

TabularGame GameFromJson(const json& doc) {
  try {
    const int n_agents = Require(doc, "n_agents").get<int>();
    const double gamma = Require(doc, "gamma").get<double>();
    const json& states = Require(doc, "states");
    const auto actions = Require(doc, "actions").get<std::vector<int>>();
    if (static_cast<int>(actions.size()) != n_agents) {
      throw ConfigError("'actions' must list one count per agent");
    }
    int num_states = 0;
    std::vector<std::string> labels;
    if (states.is_number_integer()) {
      num_states = states.get<int>();
    } else {
      labels = states.get<std::vector<std::string>>();
      num_states = static_cast<int>(labels.size());
    }
    TabularGame game(actions, num_states, gamma);
    if (!labels.empty()) game.set_state_labels(labels);
    if (doc.contains("action_labels")) {
      game.set_action_labels(
          doc.at("action_labels").get<std::vector<std::vector<std::string>>>());
    }
    const json& reward = Require(doc, "reward");
    const json& transition = Require(doc, "transition");
    const int joint = game.num_joint_actions();
    if (static_cast<int>(reward.size()) != num_states ||
        static_cast<int>(transition.size()) != num_states) {
      throw ConfigError("reward/transition must have one row per state");
    }
    for (int s = 0; s < num_states; ++s) {
      if (static_cast<int>(reward[s].size()) != joint ||
          static_cast<int>(transition[s].size()) != joint) {
        throw ConfigError("state " + std::to_string(s) +
                          " needs one entry per joint action");
      }
      for (int a = 0; a < joint; ++a) {
        game.set_reward(s, a, reward[s][a].get<double>());
        const json& row = transition[s][a];
        if (static_cast<int>(row.size()) != num_states) {
          throw ConfigError("transition row at state " + std::to_string(s) +
                            " has wrong length");
        }
        std::vector<Transition> next;
        for (int t = 0; t < num_states; ++t) {
          double p = row[t].get<double>();
          if (p != 0.0) next.push_back({t, p});
        }
        game.set_transitions(s, a, std::move(next));
      }
    }
    game.set_initial_dist(Require(doc, "initial_dist").get<std::vector<double>>());
    for (int s : Require(doc, "terminal").get<std::vector<int>>()) {
      game.set_terminal(s);
    }
    if (doc.contains("horizon") && !doc.at("horizon").is_null()) {
      game.set_horizon(doc.at("horizon").get<int>());
    }
    return game;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed game document: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(std::string("malformed game document: ") + e.what());
  }
}

void SaveGame(const TabularGame& game, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write game file " + path);
  out << GameToJson(game).dump() << "\n";
}

TabularGame LoadGame(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open game file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse game file " + path + ": " + e.what());
  }
  return GameFromJson(doc);
}

json PolicyToJson(const FactoredPolicy& policy) {
  json doc;
  doc["n_agents"] = policy.num_agents();
  doc["num_states"] = policy.num_states();
  doc["actions"] = policy.actions_per_agent();
  json tables = json::array();
  for (int i = 0; i < policy.num_agents(); ++i) {
    json rows = json::array();
    for (int s = 0; s < policy.num_states(); ++s) {
      std::span<const double> row = policy.Row(i, s);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    tables.push_back(std::move(rows));
  }
  doc["policy"] = std::move(tables);
  return doc;
}

FactoredPolicy PolicyFromJson(const json& doc) {
  try {
    const int num_states = doc.at("num_states").get<int>();
    const auto actions = doc.at("actions").get<std::vector<int>>();
    FactoredPolicy policy(num_states, actions);
    const json& tables = doc.at("policy");
    if (tables.size() != actions.size()) {
      throw ConfigError("policy document needs one table per agent");
    }
    for (size_t i = 0; i < actions.size(); ++i) {
      if (static_cast<int>(tables[i].size()) != num_states) {
        throw ConfigError("policy table has wrong number of states");
      }
      for (int s = 0; s < num_states; ++s) {
        auto row = tables[i][s].get<std::vector<double>>();
        if (static_cast<int>(row.size()) != actions[i]) {
          throw ConfigError("policy row has wrong number of actions");
        }
        policy.SetRow(static_cast<int>(i), s, row);
      }
    }
    if (policy.MaxRowError() > 1e-6) {
      throw ConfigError("policy rows must be distributions");
    }
    return policy;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed policy document: ") + e.what());
  }
}

void SavePolicy(const FactoredPolicy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write policy file " + path);
  out << PolicyToJson(policy).dump(1) << "\n";
}

FactoredPolicy LoadPolicy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open policy file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse policy file " + path + ": " + e.what());
  }
  return PolicyFromJson(doc);
}

}  // namespace inspo
