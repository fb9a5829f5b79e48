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

#ifndef INSPO_GAME_IO_H_
#define INSPO_GAME_IO_H_

#include <string>

#include "json.hpp"
#include "inspo/game.h"

namespace inspo {

// Dense document form: n_agents, gamma, states, actions, reward[s][a_flat],
// transition[s][a_flat][s_next], initial_dist, terminal, plus optional
// horizon and action_labels.
nlohmann::json GameToJson(const TabularGame& game);
TabularGame GameFromJson(const nlohmann::json& doc);
void SaveGame(const TabularGame& game, const std::string& path);
TabularGame LoadGame(const std::string& path);

// Policy document: n_agents, num_states, actions, policy[agent][state][action].
nlohmann::json PolicyToJson(const FactoredPolicy& policy);
FactoredPolicy PolicyFromJson(const nlohmann::json& doc);
void SavePolicy(const FactoredPolicy& policy, const std::string& path);
FactoredPolicy LoadPolicy(const std::string& path);

}  // namespace inspo

#endif  // INSPO_GAME_IO_H_
