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

#include <cmath>
#include <map>
#include <queue>

#include "gtest/gtest.h"
#include "inspo/environments.h"
#include "inspo/errors.h"
#include "inspo/planning.h"
#include "test_util.h"

namespace inspo {
namespace {

using Pos = std::array<GridCell, 2>;

TEST(MatrixGamesTest, XorRewards) {
  const TabularGame g = BuildXor();
  EXPECT_EQ(g.num_states(), 2);
  EXPECT_TRUE(g.is_terminal(1));
  EXPECT_EQ(g.gamma(), 0.0);
  const JointActionSpace& j = g.joint();
  EXPECT_EQ(g.reward(0, j.Encode(std::vector<int>{0, 0})), 0.0);
  EXPECT_EQ(g.reward(0, j.Encode(std::vector<int>{0, 1})), 1.0);
  EXPECT_EQ(g.reward(0, j.Encode(std::vector<int>{1, 0})), 1.0);
  EXPECT_EQ(g.reward(0, j.Encode(std::vector<int>{1, 1})), -2.0);
  for (int a = 0; a < 4; ++a) {
    ASSERT_EQ(g.transitions(0, a).size(), 1u);
    EXPECT_EQ(g.transitions(0, a)[0].next_state, 1);
  }
}

TEST(MatrixGamesTest, MneRewards) {
  const TabularGame g = BuildMne();
  const double diag[3] = {5.0, 10.0, 20.0};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double r = g.reward(0, g.joint().Encode(std::vector<int>{a, b}));
      EXPECT_EQ(r, a == b ? diag[a] : -20.5);
    }
  }
  EXPECT_THROW(BuildMne(5.0), ConfigError);
  EXPECT_NO_THROW(BuildMne(4.9));
}

TEST(BridgeTest, StateSpace) {
  const TabularGame g = BuildBridge();
  BridgeGeometry geo{BridgeLayout()};
  // Two 2x3 banks plus three bridge cells.
  EXPECT_EQ(geo.walkable().size(), 15u);
  EXPECT_EQ(g.num_states(), 15 * 14 - 1 + 1);
  EXPECT_EQ(g.num_states(), geo.num_states());
  EXPECT_TRUE(g.is_terminal(geo.done_state()));
  EXPECT_EQ(g.horizon(), 50);
  EXPECT_DOUBLE_EQ(g.gamma(), 0.99);
  EXPECT_EQ(g.initial_dist()[geo.start_state()], 1.0);
  const Pos start = geo.Positions(geo.start_state());
  EXPECT_EQ(start[0], (GridCell{2, 1}));
  EXPECT_EQ(start[1], (GridCell{4, 1}));
  for (int s = 0; s < geo.done_state(); ++s) {
    const Pos p = geo.Positions(s);
    EXPECT_EQ(geo.StateOf(p[0], p[1]), s);
  }
}

TEST(BridgeTest, WaterAndBanks) {
  BridgeGeometry geo{BridgeLayout()};
  EXPECT_FALSE(geo.IsWalkable({2, 0}));
  EXPECT_FALSE(geo.IsWalkable({3, 2}));
  EXPECT_TRUE(geo.IsWalkable({3, 1}));
  EXPECT_TRUE(geo.IsBridge({3, 1}));
  EXPECT_TRUE(geo.IsWalkable({0, 0}));
  EXPECT_FALSE(geo.IsBridge({1, 1}));
  EXPECT_FALSE(geo.IsWalkable({7, 1}));
}

TEST(BridgeTest, OnePersonBridgeMoves) {
  BridgeGeometry geo{BridgeLayout()};
  // Both step into the middle cell: blocked.
  EXPECT_EQ(geo.Step({{{2, 1}, {4, 1}}}, {kRight, kLeft}), (Pos{{{2, 1}, {4, 1}}}));
  // Head-on swap: blocked.
  EXPECT_EQ(geo.Step({{{2, 1}, {3, 1}}}, {kRight, kLeft}), (Pos{{{2, 1}, {3, 1}}}));
  // Following into a vacated cell is allowed.
  EXPECT_EQ(geo.Step({{{2, 1}, {3, 1}}}, {kRight, kRight}), (Pos{{{3, 1}, {4, 1}}}));
  // Water and the grid edge leave the agent in place.
  EXPECT_EQ(geo.Step({{{3, 1}, {0, 0}}}, {kUp, kLeft}), (Pos{{{3, 1}, {0, 0}}}));
  EXPECT_EQ(geo.Step({{{1, 0}, {0, 2}}}, {kRight, kDown}), (Pos{{{1, 0}, {0, 2}}}));
  // An agent at its goal is frozen.
  EXPECT_EQ(geo.Step({{{6, 1}, {1, 1}}}, {kUp, kLeft}), (Pos{{{6, 1}, {0, 1}}}));
  // Independent moves.
  EXPECT_EQ(geo.Step({{{1, 1}, {5, 1}}}, {kDown, kUp}), (Pos{{{1, 2}, {5, 0}}}));
}

TEST(BridgeTest, SwapRuleOnlyBlocksBridgeSwaps) {
  BridgeLayout layout;
  layout.collision_rule = CollisionRule::kSwapForbidden;
  BridgeGeometry geo(layout);
  EXPECT_EQ(geo.Step({{{0, 0}, {1, 0}}}, {kRight, kLeft}), (Pos{{{1, 0}, {0, 0}}}));
  EXPECT_EQ(geo.Step({{{2, 1}, {3, 1}}}, {kRight, kLeft}), (Pos{{{2, 1}, {3, 1}}}));
  BridgeGeometry block{BridgeLayout()};
  EXPECT_EQ(block.Step({{{0, 0}, {1, 0}}}, {kRight, kLeft}), (Pos{{{0, 0}, {1, 0}}}));
}

TEST(BridgeTest, LayoutValidation) {
  BridgeLayout bad;
  bad.start_positions = {GridCell{0, 0}, GridCell{4, 1}};
  EXPECT_THROW(ValidateLayout(bad), ConfigError);
  bad = BridgeLayout();
  bad.goal_positions = {GridCell{0, 1}, GridCell{0, 0}};
  EXPECT_THROW(ValidateLayout(bad), ConfigError);
  bad = BridgeLayout();
  bad.bridge_cells = {{2, 1}, {4, 1}};
  EXPECT_THROW(ValidateLayout(bad), ConfigError);
  bad = BridgeLayout();
  bad.gamma = 1.0;
  EXPECT_THROW(BuildBridge(bad), ConfigError);
}

// Fewest joint steps from the start until both agents are on their goals,
// by breadth-first search over position pairs.
int ShortestJointPlan(const BridgeGeometry& geo) {
  const BridgeLayout& l = geo.layout();
  std::map<std::pair<int, int>, int> dist;
  auto key = [&](const Pos& p) {
    return std::make_pair(p[0].y * l.grid_width + p[0].x,
                          p[1].y * l.grid_width + p[1].x);
  };
  const Pos start = geo.Positions(geo.start_state());
  std::queue<Pos> frontier;
  frontier.push(start);
  dist[key(start)] = 0;
  while (!frontier.empty()) {
    const Pos p = frontier.front();
    frontier.pop();
    const int d = dist[key(p)];
    if (p[0] == l.goal_positions[0] && p[1] == l.goal_positions[1]) return d;
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        const Pos q = geo.Step(p, {a, b});
        if (dist.emplace(key(q), d + 1).second) frontier.push(q);
      }
    }
  }
  return -1;
}

TEST(BridgeTest, ValueIterationMatchesShortestPlan) {
  const BridgeLayout layout;
  const TabularGame g = BuildBridge(layout);
  const int steps = ShortestJointPlan(BridgeGeometry(layout));
  EXPECT_EQ(steps, 9);
  const double oracle =
      layout.step_reward * (1.0 - std::pow(layout.gamma, steps)) / (1.0 - layout.gamma);
  const JointOptimum opt = JointValueIteration(g);
  EXPECT_NEAR(StartValue(g, opt.v), oracle, 1e-9);
  EXPECT_NEAR(oracle, -0.864828, 1e-6);
}

TEST(BridgeTest, ExpertPoliciesAreOptimalAndDistinct) {
  const BridgeLayout layout;
  const TabularGame g = BuildBridge(layout);
  const auto experts = BridgeExpertPolicies(g, layout);
  const double opt = StartValue(g, JointValueIteration(g).v);
  BridgeGeometry geo(layout);
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(testing::BruteReturn(g, experts[k]), opt, 1e-9);
    for (int i = 0; i < 2; ++i) {
      for (int s = 0; s < g.num_states(); ++s) {
        const auto row = experts[k].Row(i, s);
        EXPECT_EQ(*std::max_element(row.begin(), row.end()), 1.0);
      }
    }
  }
  // Expert k makes agent k step back from the start.
  const int s0 = geo.start_state();
  EXPECT_EQ(experts[0].Prob(0, s0, kLeft), 1.0);
  EXPECT_EQ(experts[1].Prob(1, s0, kRight), 1.0);
}

}  // namespace
}  // namespace inspo
