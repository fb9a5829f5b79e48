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

#ifndef INSPO_ENVIRONMENTS_H_
#define INSPO_ENVIRONMENTS_H_

#include <array>
#include <string>
#include <vector>

#include "inspo/game.h"

namespace inspo {

inline constexpr double kDefaultMneOffDiagonal = -20.5;

// Two agents, actions {A, B}, one state, gamma 0.
// r(A,A)=0, r(A,B)=r(B,A)=1, r(B,B)=-2.
TabularGame BuildXor();

// Two agents, actions {A, B, C}, one state, gamma 0. Diagonal rewards
// (5, 10, 20); every off-diagonal entry equals `off_diagonal`, which must be
// below 5.
TabularGame BuildMne(double off_diagonal = kDefaultMneOffDiagonal);

struct GridCell {
  int x = 0;
  int y = 0;
  bool operator==(const GridCell&) const = default;
};

enum class CollisionRule {
  // Same-target moves and position swaps block both agents.
  kBlock,
  // Same-target moves block both agents; swaps are blocked only when one of
  // the two cells is a bridge cell.
  kSwapForbidden,
};

// Two banks joined by a single-file bridge. Columns spanned by the bridge are
// water except for the bridge cells; every other cell is walkable.
struct BridgeLayout {
  int grid_width = 7;
  int grid_height = 3;
  std::vector<GridCell> bridge_cells = {{2, 1}, {3, 1}, {4, 1}};
  std::array<GridCell, 2> start_positions = {GridCell{2, 1}, GridCell{4, 1}};
  std::array<GridCell, 2> goal_positions = {GridCell{6, 1}, GridCell{0, 1}};
  double step_reward = -0.1;
  double gamma = 0.99;
  CollisionRule collision_rule = CollisionRule::kBlock;
  int max_steps = 50;
};

// Throws ConfigError naming the first violated layout rule.
void ValidateLayout(const BridgeLayout& layout);

enum BridgeAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };

// Index between grid positions and game states. State ids enumerate ordered
// pairs of distinct walkable cells (agent 0 first); the final id is the
// absorbing done state reached when both agents stand on their goals.
class BridgeGeometry {
 public:
  explicit BridgeGeometry(const BridgeLayout& layout);

  const BridgeLayout& layout() const { return layout_; }
  int num_states() const { return static_cast<int>(pairs_.size()) + 1; }
  int done_state() const { return static_cast<int>(pairs_.size()); }
  int start_state() const;
  bool IsWalkable(GridCell c) const;
  bool IsBridge(GridCell c) const;
  const std::vector<GridCell>& walkable() const { return walkable_; }
  // Positions of both agents in a non-done state.
  std::array<GridCell, 2> Positions(int state) const;
  int StateOf(GridCell p0, GridCell p1) const;
  // Resolves one simultaneous move from the given positions.
  std::array<GridCell, 2> Step(std::array<GridCell, 2> pos,
                               std::array<int, 2> actions) const;

 private:
  int CellIndex(GridCell c) const;

  BridgeLayout layout_;
  std::vector<GridCell> walkable_;
  std::vector<int> cell_index_;
  std::vector<std::array<int, 2>> pairs_;
  std::vector<int> pair_index_;
};

TabularGame BuildBridge(const BridgeLayout& layout = BridgeLayout());

// The two deterministic optimal joint policies that differ in which agent
// yields at the start: entry k is the policy in which agent k steps back.
// Both follow optimal joint actions with lowest-index tie-breaking.
std::array<FactoredPolicy, 2> BridgeExpertPolicies(const TabularGame& game,
                                                   const BridgeLayout& layout);

}  // namespace inspo

#endif  // INSPO_ENVIRONMENTS_H_
