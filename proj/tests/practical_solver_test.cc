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
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "gradient_check.h"
#include "inspo/analysis.h"
#include "inspo/data.h"
#include "inspo/environments.h"
#include "inspo/errors.h"
#include "inspo/practical_solver.h"
#include "test_util.h"

namespace inspo {
namespace {

OfflineDataset Preset(const TabularGame& g, const std::string& v) {
  return MakeMatrixDataset(g, MatrixPresetWeights(v));
}

TEST(RhoTest, BehaviorTeammatesGiveOne) {
  const TabularGame g = BuildMne();
  const OfflineDataset d = Preset(g, "mne-imbalanced");
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  for (const auto& r : d.records) {
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(ComputeRho(mu.factored, mu, r, i), 1.0, 1e-12);
  }
}

TEST(RhoTest, TwoAgentRatio) {
  const TabularGame g = BuildXor();
  // Agent 1 plays A with probability 0.3 in the data.
  const OfflineDataset d = MakeMatrixDataset(g, {{{0, 0}, 0.3}, {{0, 1}, 0.7}});
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  FactoredPolicy pi = mu.factored;
  pi.SetRow(1, 0, std::vector<double>{0.9, 0.1});
  EXPECT_NEAR(ComputeRho(pi, mu, d.records[0], 0), 3.0, 1e-12);
  EXPECT_NEAR(ComputeRho(pi, mu, d.records[1], 0), 0.1 / 0.7, 1e-12);
}

TEST(RhoTest, ThreeAgentGeometricMean) {
  Rng rng(31);
  testing::RandomGameSpec spec;
  spec.min_agents = 3;
  const TabularGame g = testing::RandomGame(rng, spec);
  const OfflineDataset d = testing::RandomFullSupportDataset(g, rng);
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  const FactoredPolicy pi = testing::RandomPolicy(g, rng);
  for (const auto& r : d.records) {
    for (int i = 0; i < 3; ++i) {
      double num = 1.0, den = 0.0;
      for (int j = 0; j < 3; ++j) {
        if (j != i) num *= pi.Prob(j, r.state, r.joint_action.per_agent[j]);
      }
      for (int b = 0; b < g.num_actions(i); ++b) {
        den += mu.Joint(r.state, g.joint().WithAction(r.joint_action.flat_index, i, b));
      }
      EXPECT_NEAR(ComputeRho(pi, mu, r, i), std::sqrt(num / den), 1e-12);
    }
  }
}

TEST(ResampleTest, SizeDeterminismAndDegenerateCase) {
  const TabularGame g = BuildMne();
  const OfflineDataset d = Preset(g, "mne-balanced");
  const std::vector<double> rho(d.records.size(), 1.0);
  const ResampledDataset a = Resample(d, rho, 500, 7);
  const ResampledDataset b = Resample(d, rho, 500, 7);
  EXPECT_EQ(a.multiplicities, b.multiplicities);
  EXPECT_EQ(std::accumulate(a.multiplicities.begin(), a.multiplicities.end(), 0), 500);
  std::vector<double> one(d.records.size(), 0.0);
  one[4] = 2.0;
  const ResampledDataset c = Resample(d, one, 100, 3);
  EXPECT_EQ(c.multiplicities[4], 100);
  EXPECT_THROW(Resample(d, std::vector<double>(d.records.size(), 0.0), 10, 1),
               NumericError);
}

TEST(ResampleTest, MonteCarloMatchesWeightedMean) {
  const TabularGame g = BuildMne();
  const OfflineDataset d = Preset(g, "mne-imbalanced");
  Rng rng(32);
  std::vector<double> rho(d.records.size()), f(d.records.size());
  for (size_t r = 0; r < rho.size(); ++r) {
    rho[r] = 0.2 + rng.Uniform();
    f[r] = d.records[r].reward;
  }
  double num = 0.0, den = 0.0;
  for (size_t r = 0; r < rho.size(); ++r) {
    num += d.records[r].weight * rho[r] * f[r];
    den += d.records[r].weight * rho[r];
  }
  double mean = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    const ResampledDataset s = Resample(d, rho, 10000, seed);
    double acc = 0.0;
    for (size_t r = 0; r < rho.size(); ++r) acc += s.multiplicities[r] * f[r];
    mean += acc / 10000.0 / seeds;
  }
  EXPECT_NEAR(mean, num / den, 0.02 * std::max(1.0, std::abs(num / den)));
}

TEST(ResampleTest, EqualRatiosKeepBaseWeighting) {
  const TabularGame g = BuildMne();
  const OfflineDataset d = Preset(g, "mne-imbalanced");
  const ResampledDataset s =
      Resample(d, std::vector<double>(d.records.size(), 3.0), 200000, 11);
  for (size_t r = 0; r < d.records.size(); ++r) {
    EXPECT_NEAR(s.multiplicities[r] / 200000.0, d.records[r].weight, 0.005);
  }
}

TEST(TdTargetTest, TerminalAndBootstrap) {
  LocalQTable target(0, 3, 2);
  target(1, 0) = 1.0;
  target(1, 1) = 3.0;
  TransitionRecord rec;
  rec.state = 0;
  rec.reward = 0.5;
  rec.next_state = 1;
  const std::vector<double> pi = {0.25, 0.75}, mu = {0.5, 0.5};
  rec.done = true;
  EXPECT_EQ(TdTarget(rec, target, pi, mu, {0.3, 0.2}, 0.9), 0.5);
  rec.done = false;
  const double a = 0.3, b = 0.2;
  double bracket = 0.0;
  for (int k = 0; k < 2; ++k) {
    bracket += pi[k] * (target(1, k) - a * std::log(pi[k] / mu[k]) - b * std::log(pi[k]));
  }
  EXPECT_NEAR(TdTarget(rec, target, pi, mu, {a, b}, 0.9), 0.5 + 0.9 * bracket, 1e-14);
}

TEST(LossTest, QLossGradientMatchesFiniteDifferences) {
  Rng rng(33);
  for (int k = 0; k < 25; ++k) {
    const auto in = testing::MakeGradientInstance(rng);
    const testing::GradientCheck c = testing::CheckQLossGradient(*in);
    EXPECT_LT(c.loss_error, 1e-10);
    EXPECT_LT(c.gradient_error, 1e-5);
  }
}

TEST(LossTest, ExtractionGradientMatchesFiniteDifferences) {
  Rng rng(34);
  for (int k = 0; k < 25; ++k) {
    const auto in = testing::MakeGradientInstance(rng);
    const testing::GradientCheck c = testing::CheckExtractionGradient(*in);
    EXPECT_LT(c.loss_error, 1e-10);
    EXPECT_LT(c.gradient_error, 1e-5);
  }
}

TEST(LossTest, CqlVanishesWithOneAction) {
  TabularGame g({1, 1}, 2, 0.0);
  g.set_reward(0, 0, 1.0);
  g.set_transitions(0, 0, {{1, 1.0}});
  g.set_reward(1, 0, 0.0);
  g.set_transitions(1, 0, {{1, 1.0}});
  g.set_terminal(1);
  g.set_initial_dist({1.0, 0.0});
  const OfflineDataset d = MakeMatrixDataset(g, {{{0, 0}, 1.0}});
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  const ResampledDataset data = Resample(d, {1.0}, 10, 1);
  LocalQTable q(0, 2, 1, 0.4), target(0, 2, 1);
  const double with = LocalQLoss(q, target, data, mu.factored, mu, {0.1, 0}, 5.0, 0).loss;
  const double without = LocalQLoss(q, target, data, mu.factored, mu, {0.1, 0}, 0.0, 0).loss;
  EXPECT_NEAR(with, without, 1e-15);
}

TEST(LossTest, OneStepFixedPointIsWeightedMeanReward) {
  const TabularGame g = BuildXor();
  const OfflineDataset d = Preset(g, "xor-c");
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  std::vector<double> rho = {1.0, 2.0, 1.0, 4.0};
  const ResampledDataset data = Resample(d, rho, 1000, 5);
  LocalQTable q(0, 2, 2), target(0, 2, 2);
  Optimizer sgd(OptimizerKind::kSgd, q.values().size(), 0.4);
  for (int k = 0; k < 300; ++k) {
    LocalQStep(q, target, data, mu.factored, mu, {0.0, 0.0}, 0.0, 0.0, sgd);
  }
  for (int a = 0; a < 2; ++a) {
    double num = 0.0, den = 0.0;
    for (size_t r = 0; r < d.records.size(); ++r) {
      if (d.records[r].joint_action.per_agent[0] != a) continue;
      num += data.multiplicities[r] * d.records[r].reward;
      den += data.multiplicities[r];
    }
    EXPECT_NEAR(q(0, a), num / den, 1e-9);
  }
}

TEST(TargetTest, SoftUpdates) {
  LocalQTable online(0, 2, 2), target(0, 2, 2);
  for (int k = 0; k < 4; ++k) online.values()[k] = k + 1.0;
  LocalQTable copy = target;
  SoftTargetUpdate(copy, online, 1.0);
  EXPECT_EQ(copy.values(), online.values());
  LocalQTable same = online;
  SoftTargetUpdate(same, online, 0.01);
  SoftTargetUpdate(same, online, 0.01);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(same.values()[j], online.values()[j], 1e-14);
  }
  for (int k = 1; k <= 50; ++k) {
    SoftTargetUpdate(target, online, 0.1);
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(online.values()[j] - target.values()[j],
                  std::pow(0.9, k) * online.values()[j], 1e-12);
    }
  }
  EXPECT_ANY_THROW(SoftTargetUpdate(target, online, 0.0));
}

TEST(ExtractionTest, UnitWeightsGiveBehaviorCloningGradient) {
  const TabularGame g = BuildMne();
  const OfflineDataset d = Preset(g, "mne-imbalanced");
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  const ResampledDataset data = Resample(d, std::vector<double>(9, 1.0), 300, 2);
  SoftmaxPolicyParams params = SoftmaxPolicyParams::FromBehavior(mu);
  params.logits[1](0, 2) += 1.0;
  const std::vector<double> w(9, 1.0);
  const LossAndGradient lg = ExtractionLoss(params, 1, data, w);
  const std::vector<double> pi = params.Probabilities(1, 0);
  std::vector<double> counts(3, 0.0);
  for (size_t r = 0; r < 9; ++r) {
    counts[d.records[r].joint_action.per_agent[1]] += data.multiplicities[r];
  }
  for (int b = 0; b < 3; ++b) EXPECT_NEAR(lg.gradient[b], pi[b] - counts[b] / 300.0, 1e-14);
}

TEST(ExtractionTest, WeightsFollowAdvantage) {
  const TabularGame g = BuildXor();
  const OfflineDataset d = Preset(g, "xor-c");
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  const ResampledDataset data = Resample(d, std::vector<double>(4, 1.0), 10, 1);
  LocalQTable target(0, 2, 2);
  target(0, 0) = 1.0;
  target(0, 1) = -1.0;
  const std::vector<double> w =
      ExtractionWeights(target, data, mu.factored, mu, {0.5, 0.0}, 20.0);
  for (size_t r = 0; r < 4; ++r) {
    const double adv = d.records[r].joint_action.per_agent[0] == 0 ? 1.0 : -1.0;
    EXPECT_NEAR(w[r], std::exp(adv / 0.5), 1e-12);
  }
  const std::vector<double> clipped =
      ExtractionWeights(target, data, mu.factored, mu, {0.01, 0.0}, 20.0);
  EXPECT_NEAR(clipped[0], std::exp(20.0), 1e-3);
}

TEST(SoftmaxParamsTest, InitAndMasking) {
  const TabularGame g = BuildXor();
  const OfflineDataset d = MakeMatrixDataset(g, {{{0, 1}, 1.0}});
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  SoftmaxPolicyParams p = SoftmaxPolicyParams::FromBehavior(mu);
  EXPECT_EQ(p.ToPolicy(), mu.factored);
  const ResampledDataset data = Resample(d, {1.0}, 10, 1);
  Optimizer adam(OptimizerKind::kAdam, p.logits[0].values().size(), 0.1);
  const double masked = p.logits[0](0, 1);
  for (int k = 0; k < 20; ++k) PolicyExtractionStep(p, 0, data, std::vector<double>{5.0}, adam);
  EXPECT_EQ(p.logits[0](0, 1), masked);
  EXPECT_EQ(p.Probabilities(0, 0)[1], 0.0);
}

TEST(AutoAlphaTest, Dynamics) {
  AutoAlphaState s;
  s.alpha = 0.5;
  const std::vector<double> at_target(2, s.target_kl);
  EXPECT_DOUBLE_EQ(AutoAlphaStep(s, at_target).alpha, 0.5);
  EXPECT_GT(AutoAlphaStep(s, std::vector<double>{1.0, 1.0}).alpha, 0.5);
  EXPECT_LT(AutoAlphaStep(s, std::vector<double>{0.0, 0.0}).alpha, 0.5);
  for (int k = 0; k < 2000; ++k) s = AutoAlphaStep(s, std::vector<double>{0.0, 0.0});
  EXPECT_EQ(s.alpha, s.alpha_min);
}

TEST(PracticalSolveTest, XorBCoordinates) {
  const TabularGame g = BuildXor();
  const OfflineDataset d = Preset(g, "xor-b");
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  PracticalConfig c;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    c.seed = seed;
    const PracticalResult r = PracticalSolve(d, mu, ShapeOf(g), c);
    const int a0 = r.policy.Prob(0, 0, 0) > 0.5 ? 0 : 1;
    const int a1 = r.policy.Prob(1, 0, 0) > 0.5 ? 0 : 1;
    EXPECT_NE(a0, a1);
    EXPECT_GT(ExactReturn(g, r.policy), 0.99);
    EXPECT_EQ(r.trace.rows.size(), static_cast<size_t>(c.max_iterations));
  }
}

TEST(PracticalSolveTest, MneImbalancedReachesBestDiagonal) {
  const TabularGame g = BuildMne();
  const OfflineDataset d = Preset(g, "mne-imbalanced");
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  PracticalConfig c;
  const PracticalResult r = PracticalSolve(d, mu, ShapeOf(g), c);
  EXPECT_GT(r.policy.JointProb(g.joint(), 0, 8), 0.99);
  EXPECT_NEAR(ExactReturn(g, r.policy), 20.0, 0.05);
}

TEST(PracticalSolveTest, ConvergedPolicyIsClosedFormOfItsCritic) {
  const TabularGame g = BuildMne();
  const OfflineDataset d = Preset(g, "mne-balanced");
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  PracticalConfig c;
  c.schedule = {1.0, 0.0, 1.0};
  c.max_iterations = 300;
  c.cql_weight = 0.0;
  c.order = OrderMode::kFixed;
  const PracticalResult r = PracticalSolve(d, mu, ShapeOf(g), c);
  // With fixed temperatures the last agent's logits track its critic.
  const int i = 1;
  std::vector<double> row(r.local_q[i].Row(0).begin(), r.local_q[i].Row(0).end());
  const std::vector<double> closed = ClosedFormUpdate(row, mu.factored.Row(i, 0), {1.0, 0.0});
  double tv = 0.0;
  for (int b = 0; b < 3; ++b) tv += 0.5 * std::abs(closed[b] - r.policy.Prob(i, 0, b));
  EXPECT_LT(tv, 1e-3);
}

TEST(PracticalSolveTest, DeterministicAndDataOnly) {
  const TabularGame g = BuildXor();
  const OfflineDataset d = Preset(g, "xor-a");
  const BehaviorModel mu = EstimateBehavior(d, ShapeOf(g));
  PracticalConfig c;
  c.max_iterations = 50;
  c.auto_alpha = true;
  const PracticalResult a = PracticalSolve(d, mu, ShapeOf(g), c);
  const PracticalResult b = PracticalSolve(d, mu, ShapeOf(g), c);
  EXPECT_EQ(a.policy, b.policy);
  EXPECT_EQ(a.final_alpha, b.final_alpha);
  for (size_t k = 0; k < a.trace.rows.size(); ++k) {
    EXPECT_EQ(a.trace.rows[k].v, b.trace.rows[k].v);
    EXPECT_EQ(a.trace.rows[k].mean_rho, b.trace.rows[k].mean_rho);
  }
}

TEST(AggregateTest, MergesDuplicates) {
  const TabularGame g = BuildXor();
  OfflineDataset d = Preset(g, "xor-b");
  d.records.push_back(d.records[0]);
  d.records.back().trajectory_id = 9;
  const OfflineDataset agg = AggregateRecords(d);
  ASSERT_EQ(agg.records.size(), 3u);
  double total = 0.0;
  for (const auto& r : agg.records) total += r.weight;
  EXPECT_NEAR(total, 4.0 / 3.0, 1e-15);
}

}  // namespace
}  // namespace inspo
