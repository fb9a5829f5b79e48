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

#include "inspo/analysis.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "inspo/errors.h"

namespace inspo {
namespace {

double Variance(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(xs.size());
}

double Mean(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
}

// E_{pi^i}[alpha log(pi^i / mu^i) + beta log pi^i] at one state.
double AgentPenalty(std::span<const double> pi, std::span<const double> mu,
                    Temperatures temps) {
  double acc = 0.0;
  for (size_t a = 0; a < pi.size(); ++a) {
    if (!InSupport(pi[a])) continue;
    acc += pi[a] * (temps.alpha * (FlooredLog(pi[a]) - FlooredLog(mu[a])) +
                    temps.beta * FlooredLog(pi[a]));
  }
  return acc;
}

// Calls fn(assignment, num_blocks) for every set partition of n items.
void ForEachPartition(int n,
                      const std::function<void(const std::vector<int>&, int)>& fn) {
  std::vector<int> block(n, 0);
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == n) {
      fn(block, used);
      return;
    }
    for (int b = 0; b <= used; ++b) {
      block[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  if (n == 0) {
    fn(block, 0);
    return;
  }
  rec(0, 0);
}

}  // namespace

std::vector<double> PolicyStateValues(const TabularGame& game,
                                      const FactoredPolicy& policy) {
  const int S = game.num_states();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(S, S);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    if (game.is_terminal(s)) continue;
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      const double p = policy.JointProb(game.joint(), s, a);
      if (p == 0.0) continue;
      b(s) += p * game.reward(s, a);
      for (const Transition& t : game.transitions(s, a)) {
        if (game.is_terminal(t.next_state)) continue;
        m(s, t.next_state) -= game.gamma() * p * t.prob;
      }
    }
  }
  Eigen::VectorXd v = m.partialPivLu().solve(b);
  return std::vector<double>(v.data(), v.data() + S);
}

double ExactReturn(const TabularGame& game, const FactoredPolicy& policy) {
  const std::vector<double> v = PolicyStateValues(game, policy);
  double out = 0.0;
  for (int s = 0; s < game.num_states(); ++s) out += game.initial_dist()[s] * v[s];
  return out;
}

RolloutStats RolloutReturn(const TabularGame& game, const FactoredPolicy& policy,
                           int n_episodes, uint64_t seed) {
  if (n_episodes < 1) {
    throw ConfigError("rollout needs at least one episode, got " +
                      std::to_string(n_episodes));
  }
  const OfflineDataset episodes =
      RolloutTrajectories(game, policy, n_episodes, seed);
  std::vector<double> disc(n_episodes, 0.0), undisc(n_episodes, 0.0);
  for (const TransitionRecord& r : episodes.records) {
    disc[r.trajectory_id] += std::pow(game.gamma(), r.step_index) * r.reward;
    undisc[r.trajectory_id] += r.reward;
  }
  RolloutStats out;
  out.episodes = n_episodes;
  out.mean = Mean(disc);
  out.std = std::sqrt(Variance(disc, out.mean));
  out.undiscounted_mean = Mean(undisc);
  out.undiscounted_std = std::sqrt(Variance(undisc, out.undiscounted_mean));
  return out;
}

QreResidualReport QreResidual(const TabularGame& game,
                              const FactoredPolicy& policy,
                              const BehaviorModel& mu, Temperatures temps,
                              double tol, int max_iters) {
  const int S = game.num_states();
  const int J = game.num_joint_actions();
  const int N = game.num_agents();
  const JointActionSpace& space = game.joint();
  const std::vector<double> v_pi = PolicyEvaluation(game, policy, mu, temps).v;

  std::vector<double> total_penalty(S, 0.0);
  std::vector<std::vector<double>> own_penalty(N, std::vector<double>(S, 0.0));
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < N; ++i) {
      own_penalty[i][s] =
          AgentPenalty(policy.Row(i, s), mu.factored.Row(i, s), temps);
      total_penalty[s] += own_penalty[i][s];
    }
  }

  QreResidualReport report;
  report.gap.assign(N, std::vector<double>(S, 0.0));
  report.max_gap = -std::numeric_limits<double>::infinity();
  std::vector<double> next_value(J);
  for (int i = 0; i < N; ++i) {
    const int A = game.num_actions(i);
    std::vector<double> v = v_pi;
    std::vector<double> updated(S, 0.0);
    bool done = false;
    int it = 0;
    while (!done && it < max_iters) {
      ++it;
      double delta = 0.0;
      double scale = 1.0;
      for (int s = 0; s < S; ++s) {
        if (game.is_terminal(s)) continue;
        std::vector<double> local_q(A, 0.0);
        for (int a = 0; a < J; ++a) {
          double w = 1.0;
          for (int j = 0; j < N; ++j) {
            if (j != i) w *= policy.Prob(j, s, space.ActionOf(a, j));
          }
          if (w == 0.0) continue;
          double ev = 0.0;
          for (const Transition& t : game.transitions(s, a)) {
            ev += t.prob * v[t.next_state];
          }
          local_q[space.ActionOf(a, i)] +=
              w * (game.reward(s, a) + game.gamma() * ev);
        }
        const std::span<const double> mu_row = mu.factored.Row(i, s);
        const std::vector<double> br = ClosedFormUpdate(local_q, mu_row, temps);
        double value = 0.0;
        for (int a = 0; a < A; ++a) {
          if (InSupport(br[a])) value += br[a] * local_q[a];
        }
        value -= AgentPenalty(br, mu_row, temps);
        value -= total_penalty[s] - own_penalty[i][s];
        updated[s] = value;
        delta = std::max(delta, std::abs(value - v[s]));
        scale = std::max(scale, std::abs(value));
      }
      for (int s = 0; s < S; ++s) {
        if (!game.is_terminal(s)) v[s] = updated[s];
      }
      done = delta <= tol * scale;
    }
    if (!done) {
      throw NumericError("best-response value iteration for agent " +
                         std::to_string(i) + " did not converge in " +
                         std::to_string(max_iters) + " iterations");
    }
    report.inner_iterations = std::max(report.inner_iterations, it);
    for (int s = 0; s < S; ++s) {
      report.gap[i][s] = v[s] - v_pi[s];
      report.max_gap = std::max(report.max_gap, report.gap[i][s]);
    }
  }
  if (N == 0 || S == 0) report.max_gap = 0.0;
  return report;
}

IgmFitResult IgmFailureDemo(const TabularGame& game,
                            const OfflineDataset& dataset) {
  if (game.num_agents() != 2) {
    throw ConfigError("the IGM demonstrator needs a two-agent game");
  }
  const JointActionSpace& space = game.joint();
  const int J = space.size();
  std::vector<double> weight(J, 0.0), weighted_target(J, 0.0);
  std::vector<std::pair<int, double>> samples;  // (flat, weight) per record
  std::vector<double> sample_target;
  for (const TransitionRecord& r : dataset.records) {
    if (r.state != 0) continue;
    if (!r.done) {
      throw ConfigError("the IGM demonstrator needs one-step data at state 0");
    }
    weight[r.joint_action.flat_index] += r.weight;
    weighted_target[r.joint_action.flat_index] += r.weight * r.reward;
    samples.push_back({r.joint_action.flat_index, r.weight});
    sample_target.push_back(r.reward);
  }
  double total_weight = 0.0;
  std::vector<int> data_cells;
  std::vector<double> cell_target(J, 0.0);
  for (int a = 0; a < J; ++a) {
    total_weight += weight[a];
    if (weight[a] > 0.0) {
      data_cells.push_back(a);
      cell_target[a] = weighted_target[a] / weight[a];
    }
  }
  if (data_cells.size() > 10) {
    throw ConfigError("the IGM demonstrator supports at most 10 distinct "
                      "joint actions in the data");
  }

  std::vector<std::vector<int>> perms0, perms1;
  for (int i = 0; i < 2; ++i) {
    std::vector<int> p(game.num_actions(i));
    for (size_t k = 0; k < p.size(); ++k) p[k] = static_cast<int>(k);
    auto& out = i == 0 ? perms0 : perms1;
    do {
      out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  }

  IgmFitResult result;
  double best_error = std::numeric_limits<double>::infinity();
  for (const auto& r0 : perms0) {
    for (const auto& r1 : perms1) {
      std::vector<int> pos0(r0.size()), pos1(r1.size());
      for (size_t k = 0; k < r0.size(); ++k) pos0[r0[k]] = static_cast<int>(k);
      for (size_t k = 0; k < r1.size(); ++k) pos1[r1[k]] = static_cast<int>(k);
      auto below = [&](int x, int y) {  // x <= y in the product order
        return pos0[space.ActionOf(x, 0)] <= pos0[space.ActionOf(y, 0)] &&
               pos1[space.ActionOf(x, 1)] <= pos1[space.ActionOf(y, 1)];
      };

      // Level sets of the isotonic fit take the weighted mean of their
      // members, so the optimum is among the feasible partitions.
      const int n = static_cast<int>(data_cells.size());
      std::vector<double> best_q;
      double best_sse = std::numeric_limits<double>::infinity();
      ForEachPartition(n, [&](const std::vector<int>& block, int blocks) {
        std::vector<double> wsum(blocks, 0.0), tsum(blocks, 0.0);
        for (int k = 0; k < n; ++k) {
          wsum[block[k]] += weight[data_cells[k]];
          tsum[block[k]] += weighted_target[data_cells[k]];
        }
        std::vector<double> q(n);
        for (int k = 0; k < n; ++k) q[k] = tsum[block[k]] / wsum[block[k]];
        for (int x = 0; x < n; ++x) {
          for (int y = 0; y < n; ++y) {
            if (x != y && below(data_cells[x], data_cells[y]) &&
                q[x] > q[y] + 1e-12) {
              return;
            }
          }
        }
        double sse = 0.0;
        for (int k = 0; k < n; ++k) {
          const double d = q[k] - cell_target[data_cells[k]];
          sse += weight[data_cells[k]] * d * d;
        }
        if (sse < best_sse - 1e-15) {
          best_sse = sse;
          best_q = q;
        }
      });

      IgmFit fit;
      fit.rank = {r0, r1};
      fit.q.assign(J, 0.0);
      double data_min = std::numeric_limits<double>::infinity();
      for (int k = 0; k < n; ++k) {
        fit.q[data_cells[k]] = best_q[k];
        data_min = std::min(data_min, best_q[k]);
      }
      for (int a = 0; a < J; ++a) {
        if (weight[a] > 0.0) continue;
        double lower = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) {
          if (below(data_cells[k], a)) lower = std::max(lower, best_q[k]);
        }
        fit.q[a] = n == 0 ? 0.0 : (std::isfinite(lower) ? lower : data_min);
      }
      for (int x = 0; x < J; ++x) {
        for (int y = 0; y < J; ++y) {
          if (below(x, y) && fit.q[x] > fit.q[y] + 1e-9) {
            throw NumericError("IGM fit is not monotone in the agent ranks");
          }
        }
      }
      double err = 0.0;
      for (size_t k = 0; k < samples.size(); ++k) {
        const double d = fit.q[samples[k].first] - sample_target[k];
        err += samples[k].second * d * d;
      }
      fit.td_error = total_weight > 0.0 ? err / total_weight : 0.0;
      fit.greedy_action = {r0.back(), r1.back()};
      if (fit.td_error < best_error - 1e-12) {
        best_error = fit.td_error;
        result.best = static_cast<int>(result.fits.size());
      }
      result.fits.push_back(std::move(fit));
    }
  }
  return result;
}

std::vector<MonotonicityViolation> MonotonicityAudit(const SolverTrace& trace,
                                                     double tol) {
  std::vector<MonotonicityViolation> out;
  for (const TraceRow& row : trace.rows) {
    for (size_t s = 0; s < row.v.size() && s < row.v_before.size(); ++s) {
      const double drop = row.v_before[s] - row.v[s];
      if (drop > tol) {
        out.push_back({row.iteration, static_cast<int>(s), drop});
      }
    }
  }
  return out;
}

}  // namespace inspo
