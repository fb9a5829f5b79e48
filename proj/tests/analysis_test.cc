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
#include <vector>

#include "gtest/gtest.h"
#include "inspo/analysis.h"
#include "inspo/data.h"
#include "inspo/environments.h"
#include "inspo/errors.h"
#include "inspo/exact_solver.h"
#include "test_util.h"

namespace inspo {
namespace {

FactoredPolicy Deterministic(const TabularGame& g, int a0, int a1) {
  FactoredPolicy p = FactoredPolicy::Uniform(g);
  std::vector<double> r0(g.num_actions(0), 0.0), r1(g.num_actions(1), 0.0);
  r0[a0] = 1.0;
  r1[a1] = 1.0;
  p.SetRow(0, 0, r0);
  p.SetRow(1, 0, r1);
  return p;
}

BehaviorModel PresetBehavior(const TabularGame& g, const std::string& v) {
  return EstimateBehavior(MakeMatrixDataset(g, MatrixPresetWeights(v)), ShapeOf(g));
}

// Regularized best-response value of agent i at a single-state game, by
// brute force over a fine grid of two-action mixed strategies.
double GridBestResponseValue(const TabularGame& g, const FactoredPolicy& pi,
                             const BehaviorModel& mu, int i, Temperatures t) {
  double best = -1e300;
  for (int k = 0; k <= 100000; ++k) {
    const double p = k / 100000.0;
    FactoredPolicy dev = pi;
    dev.SetRow(i, 0, std::vector<double>{p, 1.0 - p});
    best = std::max(best, testing::BruteSoftValues(g, dev, mu.factored, t.alpha, t.beta)[0]);
  }
  return best;
}

TEST(ExactReturnTest, MatrixExamples) {
  const TabularGame x = BuildXor();
  EXPECT_NEAR(ExactReturn(x, Deterministic(x, 0, 1)), 1.0, 1e-15);
  EXPECT_NEAR(ExactReturn(x, FactoredPolicy::Uniform(x)), 0.0, 1e-15);
  const TabularGame m = BuildMne();
  EXPECT_NEAR(ExactReturn(m, Deterministic(m, 2, 2)), 20.0, 1e-15);
}

TEST(ExactReturnTest, MatchesSuccessiveApproximation) {
  Rng rng(41);
  for (int k = 0; k < 20; ++k) {
    const TabularGame g = testing::RandomGame(rng);
    const FactoredPolicy p = testing::RandomPolicy(g, rng);
    EXPECT_NEAR(ExactReturn(g, p), testing::BruteReturn(g, p), 1e-9);
  }
}

TEST(RolloutReturnTest, DeterministicPolicyHasNoSpread) {
  const TabularGame g = BuildXor();
  const RolloutStats s = RolloutReturn(g, Deterministic(g, 1, 0), 32, 3);
  EXPECT_EQ(s.episodes, 32);
  EXPECT_EQ(s.std, 0.0);
  EXPECT_EQ(s.mean, 1.0);
  EXPECT_EQ(s.undiscounted_mean, 1.0);
}

TEST(RolloutReturnTest, WithinCltBoundOfExactReturn) {
  const TabularGame g = BuildMne();
  const BehaviorModel mu = PresetBehavior(g, "mne-balanced");
  const double exact = ExactReturn(g, mu.factored);
  int inside = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const RolloutStats s = RolloutReturn(g, mu.factored, 32, seed);
    if (std::abs(s.mean - exact) <= 3.0 * s.std / std::sqrt(32.0)) ++inside;
  }
  EXPECT_GE(inside, 19);
  const RolloutStats big = RolloutReturn(g, mu.factored, 10000, 1);
  EXPECT_NEAR(big.mean, exact, 0.6);
  const TabularGame x = BuildXor();
  const RolloutStats bx = RolloutReturn(x, FactoredPolicy::Uniform(x), 10000, 2);
  EXPECT_NEAR(bx.mean, 0.0, 0.05);
}

TEST(RolloutReturnTest, BridgeDiscounting) {
  const BridgeLayout layout;
  const TabularGame g = BuildBridge(layout);
  const auto experts = BridgeExpertPolicies(g, layout);
  const RolloutStats s = RolloutReturn(g, experts[1], 4, 0);
  EXPECT_NEAR(s.mean, ExactReturn(g, experts[1]), 1e-12);
  EXPECT_NEAR(s.undiscounted_mean, -0.9, 1e-12);
}

TEST(RolloutReturnTest, ZeroEpisodesIsError) {
  const TabularGame g = BuildXor();
  EXPECT_THROW(RolloutReturn(g, FactoredPolicy::Uniform(g), 0, 0), ConfigError);
}

TEST(QreResidualTest, ClonedPolicyOnXorBIsNotAnEquilibrium) {
  const TabularGame g = BuildXor();
  const BehaviorModel mu = PresetBehavior(g, "xor-b");
  const Temperatures t{0.5, 0.0};
  const QreResidualReport r = QreResidual(g, mu.factored, mu, t);
  EXPECT_GT(r.max_gap, 1e-3);
  const double v = testing::BruteSoftValues(g, mu.factored, mu.factored, 0.5, 0.0)[0];
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(r.gap[i][0], GridBestResponseValue(g, mu.factored, mu, i, t) - v, 1e-6);
    EXPECT_GE(r.gap[i][0], -1e-12);
  }
}

TEST(QreResidualTest, SingleAgentClosedFormOptimumHasNoGap) {
  TabularGame g({3}, 2, 0.0);
  for (int a = 0; a < 3; ++a) {
    g.set_reward(0, a, 0.5 * a - 0.2);
    g.set_transitions(0, a, {{1, 1.0}});
    g.set_reward(1, a, 0.0);
    g.set_transitions(1, a, {{1, 1.0}});
  }
  g.set_terminal(1);
  g.set_initial_dist({1.0, 0.0});
  const OfflineDataset d = MakeMatrixDataset(g, {{{0}, 0.2}, {{1}, 0.5}, {{2}, 0.3}});
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  const Temperatures t{0.3, 0.1};
  FactoredPolicy pi = mu.factored;
  pi.SetRow(0, 0, ClosedFormUpdate(std::vector<double>{-0.2, 0.3, 0.8},
                                   mu.factored.Row(0, 0), t));
  EXPECT_NEAR(QreResidual(g, pi, mu, t).max_gap, 0.0, 1e-9);
  EXPECT_GT(QreResidual(g, mu.factored, mu, t).max_gap, 1e-3);
}

TEST(QreResidualTest, ConvergedSolverOnRandomGames) {
  Rng rng(42);
  for (int k = 0; k < 5; ++k) {
    const TabularGame g = testing::RandomGame(rng);
    const BehaviorModel mu =
        EstimateBehavior(testing::RandomFullSupportDataset(g, rng), ShapeOf(g));
    ExactSolverConfig c;
    c.schedule = {0.5, 0.1, 1.0};
    c.max_iterations = 3000;
    const SolveResult r = InspoIterate(g, mu, c);
    const QreResidualReport q = QreResidual(g, r.policy, mu, c.schedule.At(0));
    EXPECT_LE(q.max_gap, 1e-5);
    for (const auto& agent : q.gap) {
      for (double gap : agent) EXPECT_GE(gap, -1e-9);
    }
  }
}

TEST(IgmTest, XorBPrefersTheUnseenAction) {
  const TabularGame g = BuildXor();
  const IgmFitResult r = IgmFailureDemo(g, MakeMatrixDataset(g, MatrixPresetWeights("xor-b")));
  ASSERT_EQ(r.fits.size(), 4u);
  const IgmFit& best = r.best_fit();
  EXPECT_LT(best.td_error, 1e-12);
  EXPECT_EQ(best.rank[0].back(), 1);
  EXPECT_EQ(best.rank[1].back(), 1);
  EXPECT_EQ(best.greedy_action, (std::vector<int>{1, 1}));
  int zero = 0;
  for (const IgmFit& f : r.fits) zero += f.td_error < 1e-12;
  EXPECT_EQ(zero, 1);
}

TEST(IgmTest, XorCHasNoExactFit) {
  const TabularGame g = BuildXor();
  const IgmFitResult r = IgmFailureDemo(g, MakeMatrixDataset(g, MatrixPresetWeights("xor-c")));
  for (const IgmFit& f : r.fits) EXPECT_GT(f.td_error, 1e-3);
}

TEST(IgmTest, SinglePointFitsAndStaysInData) {
  const TabularGame g = BuildXor();
  const IgmFitResult r = IgmFailureDemo(g, MakeMatrixDataset(g, {{{0, 1}, 1.0}}));
  for (const IgmFit& f : r.fits) {
    EXPECT_LT(f.td_error, 1e-12);
  }
  bool found = false;
  for (const IgmFit& f : r.fits) {
    if (f.rank[0].back() == 0 && f.rank[1].back() == 1) {
      found = true;
      EXPECT_EQ(f.greedy_action, (std::vector<int>{0, 1}));
    }
  }
  EXPECT_TRUE(found);
}

TEST(IgmTest, FitsAreMonotoneInRanks) {
  const TabularGame g = BuildMne();
  const IgmFitResult r =
      IgmFailureDemo(g, MakeMatrixDataset(g, MatrixPresetWeights("mne-imbalanced")));
  EXPECT_EQ(r.fits.size(), 36u);
  for (const IgmFit& f : r.fits) {
    for (int a = 0; a < 9; ++a) {
      for (int b = 0; b < 9; ++b) {
        const auto da = g.joint().Decode(a), db = g.joint().Decode(b);
        auto pos = [&](int i, int act) {
          return static_cast<int>(std::find(f.rank[i].begin(), f.rank[i].end(), act) -
                                  f.rank[i].begin());
        };
        if (pos(0, da[0]) <= pos(0, db[0]) && pos(1, da[1]) <= pos(1, db[1])) {
          EXPECT_LE(f.q[a], f.q[b] + 1e-9);
        }
      }
    }
    const int top = g.joint().Encode(f.greedy_action);
    EXPECT_EQ(*std::max_element(f.q.begin(), f.q.end()), f.q[top]);
  }
}

TEST(IgmTest, GridSearchOracle) {
  // Every ordering of XOR leaves a 2x2 grid lo <= {m1, m2} <= hi; search
  // monotone tables on a 0.05 lattice.
  const TabularGame g = BuildXor();
  const OfflineDataset d = MakeMatrixDataset(g, MatrixPresetWeights("xor-c"));
  const IgmFitResult r = IgmFailureDemo(g, d);
  std::vector<double> lattice;
  for (int k = -40; k <= 20; ++k) lattice.push_back(k / 20.0);
  for (const IgmFit& f : r.fits) {
    const int lo = g.joint().Encode(std::vector<int>{f.rank[0][0], f.rank[1][0]});
    const int m1 = g.joint().Encode(std::vector<int>{f.rank[0][1], f.rank[1][0]});
    const int m2 = g.joint().Encode(std::vector<int>{f.rank[0][0], f.rank[1][1]});
    const int hi = g.joint().Encode(std::vector<int>{f.rank[0][1], f.rank[1][1]});
    auto sq = [&](int cell, double v) {
      const double e = v - g.reward(0, cell);
      return 0.25 * e * e;
    };
    double best = 1e300;
    for (double a : lattice) {
      for (double b : lattice) {
        if (b < a) continue;
        for (double c : lattice) {
          if (c < a) continue;
          for (double h : lattice) {
            if (h < b || h < c) continue;
            best = std::min(best, sq(lo, a) + sq(m1, b) + sq(m2, c) + sq(hi, h));
          }
        }
      }
    }
    EXPECT_GE(best, f.td_error - 1e-12);
    EXPECT_NEAR(f.td_error, best, 2e-3);
  }
}

TEST(MonotonicityAuditTest, DetectsDrops) {
  SolverTrace trace;
  TraceRow row;
  row.iteration = 3;
  row.v_before = {1.0, 2.0};
  row.v = {1.0, 2.0};
  trace.rows.push_back(row);
  EXPECT_TRUE(MonotonicityAudit(trace).empty());
  trace.rows[0].v = {1.0, 1.5};
  const auto report = MonotonicityAudit(trace);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].iteration, 3);
  EXPECT_EQ(report[0].state, 1);
  EXPECT_NEAR(report[0].drop, 0.5, 1e-15);
}

TEST(MonotonicityAuditTest, SequentialXorRunIsClean) {
  const TabularGame g = BuildXor();
  const BehaviorModel mu = PresetBehavior(g, "xor-b");
  ExactSolverConfig c;
  c.schedule = {0.5, 1.0, 1.0};
  EXPECT_TRUE(MonotonicityAudit(InspoIterate(g, mu, c).trace).empty());
}

}  // namespace
}  // namespace inspo
