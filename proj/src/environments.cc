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

#include "inspo/environments.h"

#include <cmath>
#include <set>
#include <string>

#include "inspo/errors.h"
#include "inspo/planning.h"

namespace inspo {
namespace {

TabularGame MatrixGame(const std::vector<std::vector<double>>& payoff,
                       std::vector<std::string> action_names) {
  const int n = static_cast<int>(payoff.size());
  TabularGame game({n, n}, 2, 0.0);
  for (int a0 = 0; a0 < n; ++a0) {
    for (int a1 = 0; a1 < n; ++a1) {
      const int flat = game.joint().Encode(std::vector<int>{a0, a1});
      game.set_reward(0, flat, payoff[a0][a1]);
      game.set_transitions(0, flat, {{1, 1.0}});
      game.set_reward(1, flat, 0.0);
      game.set_transitions(1, flat, {{1, 1.0}});
    }
  }
  game.set_terminal(1);
  game.set_initial_dist({1.0, 0.0});
  game.set_horizon(1);
  game.set_state_labels({"play", "end"});
  game.set_action_labels({action_names, action_names});
  return game;
}

GridCell Move(GridCell c, int action) {
  switch (action) {
    case kUp: return {c.x, c.y - 1};
    case kDown: return {c.x, c.y + 1};
    case kLeft: return {c.x - 1, c.y};
    case kRight: return {c.x + 1, c.y};
    default: return c;
  }
}

std::string CellName(GridCell c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

}  // namespace

TabularGame BuildXor() {
  return MatrixGame({{0.0, 1.0}, {1.0, -2.0}}, {"A", "B"});
}

TabularGame BuildMne(double off_diagonal) {
  if (!(off_diagonal < 5.0)) {
    throw ConfigError("mne off_diagonal must be below 5 so every diagonal "
                      "stays a Nash equilibrium, got " +
                      std::to_string(off_diagonal));
  }
  const double o = off_diagonal;
  return MatrixGame({{5.0, o, o}, {o, 10.0, o}, {o, o, 20.0}}, {"A", "B", "C"});
}

void ValidateLayout(const BridgeLayout& layout) {
  auto fail = [](const std::string& msg) {
    throw ConfigError("invalid bridge layout: " + msg);
  };
  if (layout.grid_width <= 0 || layout.grid_height <= 0) fail("empty grid");
  auto inside = [&](GridCell c) {
    return c.x >= 0 && c.y >= 0 && c.x < layout.grid_width &&
           c.y < layout.grid_height;
  };
  if (layout.bridge_cells.empty()) fail("no bridge cells");
  for (size_t k = 0; k < layout.bridge_cells.size(); ++k) {
    const GridCell c = layout.bridge_cells[k];
    if (!inside(c)) fail("bridge cell " + CellName(c) + " is outside the grid");
    for (size_t j = 0; j < k; ++j) {
      if (layout.bridge_cells[j] == c) fail("bridge cells repeat");
    }
    if (k > 0) {
      const GridCell p = layout.bridge_cells[k - 1];
      if (std::abs(p.x - c.x) + std::abs(p.y - c.y) != 1) {
        fail("bridge cells do not form a simple path");
      }
    }
  }
  if (!(layout.gamma >= 0.0 && layout.gamma < 1.0)) fail("gamma outside [0,1)");
  if (layout.max_steps <= 0) fail("max_steps must be positive");
  if (!std::isfinite(layout.step_reward)) fail("step_reward must be finite");
  BridgeGeometry geo(layout);
  const auto& s = layout.start_positions;
  const auto& g = layout.goal_positions;
  if (s[0] == s[1]) fail("start positions coincide");
  for (int i = 0; i < 2; ++i) {
    if (!geo.IsBridge(s[i])) fail("start " + CellName(s[i]) + " is not on the bridge");
    if (!inside(g[i]) || !geo.IsWalkable(g[i]) || geo.IsBridge(g[i])) {
      fail("goal " + CellName(g[i]) + " must be a walkable bank cell");
    }
  }
  int lo = layout.grid_width, hi = -1;
  for (const GridCell& c : layout.bridge_cells) {
    lo = std::min(lo, c.x);
    hi = std::max(hi, c.x);
  }
  const bool opposite = (g[0].x < lo && g[1].x > hi) || (g[0].x > hi && g[1].x < lo);
  if (!opposite) fail("goals must lie on opposite banks");
}

BridgeGeometry::BridgeGeometry(const BridgeLayout& layout) : layout_(layout) {
  int lo = layout.grid_width, hi = -1;
  for (const GridCell& c : layout.bridge_cells) {
    lo = std::min(lo, c.x);
    hi = std::max(hi, c.x);
  }
  cell_index_.assign(layout.grid_width * layout.grid_height, -1);
  for (int y = 0; y < layout.grid_height; ++y) {
    for (int x = 0; x < layout.grid_width; ++x) {
      GridCell c{x, y};
      bool walk = (x < lo || x > hi) || IsBridge(c);
      if (walk) {
        cell_index_[y * layout.grid_width + x] = static_cast<int>(walkable_.size());
        walkable_.push_back(c);
      }
    }
  }
  const int W = static_cast<int>(walkable_.size());
  pair_index_.assign(W * W, -1);
  for (int i = 0; i < W; ++i) {
    for (int j = 0; j < W; ++j) {
      if (i == j) continue;
      if (walkable_[i] == layout.goal_positions[0] &&
          walkable_[j] == layout.goal_positions[1]) {
        continue;
      }
      pair_index_[i * W + j] = static_cast<int>(pairs_.size());
      pairs_.push_back({i, j});
    }
  }
}

bool BridgeGeometry::IsBridge(GridCell c) const {
  for (const GridCell& b : layout_.bridge_cells) {
    if (b == c) return true;
  }
  return false;
}

int BridgeGeometry::CellIndex(GridCell c) const {
  if (c.x < 0 || c.y < 0 || c.x >= layout_.grid_width ||
      c.y >= layout_.grid_height) {
    return -1;
  }
  return cell_index_[c.y * layout_.grid_width + c.x];
}

bool BridgeGeometry::IsWalkable(GridCell c) const { return CellIndex(c) >= 0; }

std::array<GridCell, 2> BridgeGeometry::Positions(int state) const {
  if (state < 0 || state >= static_cast<int>(pairs_.size())) {
    throw std::out_of_range("not a position state: " + std::to_string(state));
  }
  return {walkable_[pairs_[state][0]], walkable_[pairs_[state][1]]};
}

int BridgeGeometry::StateOf(GridCell p0, GridCell p1) const {
  if (p0 == layout_.goal_positions[0] && p1 == layout_.goal_positions[1]) {
    return done_state();
  }
  const int i = CellIndex(p0), j = CellIndex(p1);
  if (i < 0 || j < 0 || i == j) {
    throw std::out_of_range("positions do not form a valid state");
  }
  return pair_index_[i * static_cast<int>(walkable_.size()) + j];
}

int BridgeGeometry::start_state() const {
  return StateOf(layout_.start_positions[0], layout_.start_positions[1]);
}

std::array<GridCell, 2> BridgeGeometry::Step(std::array<GridCell, 2> pos,
                                             std::array<int, 2> actions) const {
  std::array<GridCell, 2> target;
  for (int i = 0; i < 2; ++i) {
    if (pos[i] == layout_.goal_positions[i]) {
      target[i] = pos[i];
      continue;
    }
    GridCell next = Move(pos[i], actions[i]);
    target[i] = IsWalkable(next) ? next : pos[i];
  }
  if (target[0] == target[1]) return pos;
  const bool swap = target[0] == pos[1] && target[1] == pos[0];
  if (swap) {
    if (layout_.collision_rule == CollisionRule::kBlock) return pos;
    if (IsBridge(pos[0]) || IsBridge(pos[1])) return pos;
  }
  return target;
}

TabularGame BuildBridge(const BridgeLayout& layout) {
  ValidateLayout(layout);
  BridgeGeometry geo(layout);
  const int S = geo.num_states();
  TabularGame game({5, 5}, S, layout.gamma);
  const int done = geo.done_state();
  std::vector<std::string> labels(S);
  for (int s = 0; s < S; ++s) {
    if (s == done) {
      labels[s] = "done";
      continue;
    }
    auto p = geo.Positions(s);
    labels[s] = CellName(p[0]) + CellName(p[1]);
  }
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      if (s == done) {
        game.set_reward(s, a, 0.0);
        game.set_transitions(s, a, {{done, 1.0}});
        continue;
      }
      auto next = geo.Step(geo.Positions(s), {game.joint().ActionOf(a, 0),
                                              game.joint().ActionOf(a, 1)});
      game.set_reward(s, a, layout.step_reward);
      game.set_transitions(s, a, {{geo.StateOf(next[0], next[1]), 1.0}});
    }
  }
  std::vector<double> d(S, 0.0);
  d[geo.start_state()] = 1.0;
  game.set_initial_dist(d);
  game.set_terminal(done);
  game.set_horizon(layout.max_steps);
  game.set_state_labels(labels);
  const std::vector<std::string> names = {"up", "down", "left", "right", "stay"};
  game.set_action_labels({names, names});
  return game;
}

std::array<FactoredPolicy, 2> BridgeExpertPolicies(const TabularGame& game,
                                                   const BridgeLayout& layout) {
  BridgeGeometry geo(layout);
  const JointOptimum opt = JointValueIteration(game);
  const int S = game.num_states();
  const int J = game.num_joint_actions();
  constexpr double kTieTol = 1e-9;
  std::vector<int> greedy(S, 0);
  for (int s = 0; s < S; ++s) {
    double best = opt.q(s, 0);
    for (int a = 1; a < J; ++a) {
      if (opt.q(s, a) > best + kTieTol) {
        best = opt.q(s, a);
        greedy[s] = a;
      }
    }
  }
  const int start = geo.start_state();
  double best_start = opt.q(start, 0);
  for (int a = 1; a < J; ++a) best_start = std::max(best_start, opt.q(start, a));
  std::array<FactoredPolicy, 2> out;
  for (int k = 0; k < 2; ++k) {
    const GridCell from = layout.start_positions[k];
    const int toward = layout.goal_positions[k].x > from.x ? kRight : kLeft;
    const int away = toward == kRight ? kLeft : kRight;
    int first = -1;
    for (int a = 0; a < J && first < 0; ++a) {
      if (game.joint().ActionOf(a, k) == away &&
          opt.q(start, a) >= best_start - kTieTol) {
        first = a;
      }
    }
    if (first < 0) {
      throw ConfigError("layout has no optimal plan in which agent " +
                        std::to_string(k) + " yields");
    }
    FactoredPolicy policy = FactoredPolicy::Uniform(game);
    for (int s = 0; s < S; ++s) {
      const int a = s == start ? first : greedy[s];
      for (int i = 0; i < 2; ++i) {
        std::vector<double> row(game.num_actions(i), 0.0);
        row[game.joint().ActionOf(a, i)] = 1.0;
        policy.SetRow(i, s, row);
      }
    }
    out[k] = std::move(policy);
  }
  return out;
}

}  // namespace inspo
