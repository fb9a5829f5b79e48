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

#include "inspo/practical_solver.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include "inspo/errors.h"

namespace inspo {
namespace {

constexpr uint64_t kOrderStream = 101;
constexpr uint64_t kResampleStream = 202;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-10;

double LogSumExp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  double z = 0.0;
  for (double v : x) z += std::exp(v - m);
  return m + std::log(z);
}

double TotalMultiplicity(const ResampledDataset& data) {
  double total = 0.0;
  for (int m : data.multiplicities) total += m;
  return total;
}

}  // namespace

SoftmaxPolicyParams SoftmaxPolicyParams::FromBehavior(const BehaviorModel& mu) {
  SoftmaxPolicyParams p;
  const int S = mu.shape.num_states;
  for (int i = 0; i < mu.shape.num_agents(); ++i) {
    const int A = mu.shape.actions_per_agent[i];
    LocalQTable logits(i, S, A);
    std::vector<bool> mask(static_cast<size_t>(S) * A, true);
    for (int s = 0; s < S; ++s) {
      std::span<const double> m = mu.factored.Row(i, s);
      for (int a = 0; a < A; ++a) {
        if (InSupport(m[a])) {
          logits(s, a) = std::log(m[a]);
        } else {
          logits(s, a) = 0.0;
          mask[static_cast<size_t>(s) * A + a] = false;
        }
      }
    }
    p.logits.push_back(std::move(logits));
    p.mask.push_back(std::move(mask));
  }
  return p;
}

std::vector<double> SoftmaxPolicyParams::Probabilities(int agent, int s) const {
  const LocalQTable& t = logits[agent];
  const int A = t.num_actions();
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < A; ++a) {
    if (mask[agent][static_cast<size_t>(s) * A + a]) best = std::max(best, t(s, a));
  }
  std::vector<double> out(A, 0.0);
  double z = 0.0;
  for (int a = 0; a < A; ++a) {
    if (!mask[agent][static_cast<size_t>(s) * A + a]) continue;
    out[a] = std::exp(t(s, a) - best);
    z += out[a];
  }
  for (double& p : out) p /= z;
  return out;
}

FactoredPolicy SoftmaxPolicyParams::ToPolicy() const {
  std::vector<int> actions;
  for (const auto& t : logits) actions.push_back(t.num_actions());
  const int S = logits.empty() ? 0 : logits[0].num_states();
  FactoredPolicy policy(S, actions);
  for (int i = 0; i < static_cast<int>(logits.size()); ++i) {
    for (int s = 0; s < S; ++s) policy.SetRow(i, s, Probabilities(i, s));
  }
  return policy;
}

Optimizer::Optimizer(OptimizerKind kind, size_t num_params, double learning_rate)
    : kind_(kind), lr_(learning_rate), m_(num_params, 0.0), v_(num_params, 0.0) {}

void Optimizer::Apply(std::vector<double>& params, const std::vector<double>& grad) {
  if (kind_ == OptimizerKind::kSgd) {
    for (size_t k = 0; k < params.size(); ++k) params[k] -= lr_ * grad[k];
    return;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(kAdamBeta1, t_);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t_);
  for (size_t k = 0; k < params.size(); ++k) {
    m_[k] = kAdamBeta1 * m_[k] + (1.0 - kAdamBeta1) * grad[k];
    v_[k] = kAdamBeta2 * v_[k] + (1.0 - kAdamBeta2) * grad[k] * grad[k];
    params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + kAdamEps);
  }
}

double ComputeRho(const FactoredPolicy& teammates, const BehaviorModel& mu,
                  const TransitionRecord& record, int agent) {
  const int N = mu.shape.num_agents();
  if (N == 1) return 1.0;
  const int s = record.state;
  const int a = record.joint_action.flat_index;
  double pi = 1.0;
  for (int j = 0; j < N; ++j) {
    if (j != agent) pi *= teammates.Prob(j, s, mu.space.ActionOf(a, j));
  }
  const double m = mu.TeammateMarginal(s, a, agent);
  if (!(m > 0.0)) {
    throw NumericError("record at state " + std::to_string(s) +
                       " lies outside the behavior support of its teammates");
  }
  return std::pow(pi / m, 1.0 / (N - 1));
}

ResampledDataset Resample(const OfflineDataset& dataset, std::vector<double> rho,
                          int size, Rng& rng) {
  if (rho.size() != dataset.records.size()) {
    throw std::invalid_argument("need one ratio per record");
  }
  std::vector<double> cum(rho.size());
  double total = 0.0;
  for (size_t r = 0; r < rho.size(); ++r) {
    if (rho[r] < 0.0) throw std::invalid_argument("ratios must be nonnegative");
    total += dataset.records[r].weight * rho[r];
    cum[r] = total;
  }
  if (!(total > 0.0)) {
    throw NumericError("all resampling ratios are zero; nothing to resample");
  }
  ResampledDataset out;
  out.base = &dataset;
  out.multiplicities.assign(rho.size(), 0);
  out.size = size;
  for (int k = 0; k < size; ++k) {
    const double u = rng.Uniform() * total;
    size_t r = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (r >= cum.size()) r = cum.size() - 1;
    ++out.multiplicities[r];
  }
  out.rho_values = std::move(rho);
  return out;
}

ResampledDataset Resample(const OfflineDataset& dataset, std::vector<double> rho,
                          int size, uint64_t seed) {
  Rng rng(seed);
  return Resample(dataset, std::move(rho), size, rng);
}

double TdTarget(const TransitionRecord& record, const LocalQTable& target,
                std::span<const double> pi_old_next,
                std::span<const double> mu_next, Temperatures temps,
                double gamma) {
  if (record.done) return record.reward;
  const int s = record.next_state;
  double bracket = 0.0;
  for (size_t a = 0; a < pi_old_next.size(); ++a) {
    const double p = pi_old_next[a];
    if (p <= 0.0) continue;
    const double lp = FlooredLog(p);
    bracket += p * (target(s, static_cast<int>(a)) -
                    temps.alpha * (lp - FlooredLog(mu_next[a])) - temps.beta * lp);
  }
  return record.reward + gamma * bracket;
}

LossAndGradient LocalQLoss(const LocalQTable& q, const LocalQTable& target,
                           const ResampledDataset& data,
                           const FactoredPolicy& pi_old, const BehaviorModel& mu,
                           Temperatures temps, double cql_weight, double gamma) {
  const int i = q.agent();
  const int S = q.num_states();
  const int A = q.num_actions();
  LossAndGradient out;
  out.gradient.assign(q.values().size(), 0.0);
  const double total = TotalMultiplicity(data);
  if (total <= 0.0) return out;
  // Bootstrapped bracket per next state, shared by every record.
  std::vector<double> bracket(S, 0.0);
  std::vector<bool> have(S, false);
  std::vector<double> state_mass(S, 0.0);
  for (size_t r = 0; r < data.multiplicities.size(); ++r) {
    const int m = data.multiplicities[r];
    if (m == 0) continue;
    const TransitionRecord& rec = data.base->records[r];
    state_mass[rec.state] += m;
    if (rec.done || have[rec.next_state]) continue;
    TransitionRecord probe = rec;
    probe.reward = 0.0;
    bracket[rec.next_state] =
        TdTarget(probe, target, pi_old.Row(i, rec.next_state),
                 mu.factored.Row(i, rec.next_state), temps, 1.0);
    have[rec.next_state] = true;
  }
  for (size_t r = 0; r < data.multiplicities.size(); ++r) {
    const int m = data.multiplicities[r];
    if (m == 0) continue;
    const TransitionRecord& rec = data.base->records[r];
    const int s = rec.state;
    const int a = rec.joint_action.per_agent[i];
    const double y =
        rec.done ? rec.reward : rec.reward + gamma * bracket[rec.next_state];
    const double diff = q(s, a) - y;
    out.loss += m * diff * diff;
    out.gradient[static_cast<size_t>(s) * A + a] += 2.0 * m * diff;
  }
  if (cql_weight != 0.0) {
    for (int s = 0; s < S; ++s) {
      const double m = state_mass[s];
      if (m == 0.0) continue;
      std::span<const double> row = q.Row(s);
      std::span<const double> mu_row = mu.factored.Row(i, s);
      const double lse = LogSumExp(row);
      double mean = 0.0;
      for (int b = 0; b < A; ++b) mean += mu_row[b] * row[b];
      out.loss += cql_weight * m * (lse - mean);
      for (int b = 0; b < A; ++b) {
        out.gradient[static_cast<size_t>(s) * A + b] +=
            cql_weight * m * (std::exp(row[b] - lse) - mu_row[b]);
      }
    }
  }
  out.loss /= total;
  for (double& g : out.gradient) g /= total;
  return out;
}

void LocalQStep(LocalQTable& q, const LocalQTable& target,
                const ResampledDataset& data, const FactoredPolicy& pi_old,
                const BehaviorModel& mu, Temperatures temps, double cql_weight,
                double gamma, Optimizer& optimizer) {
  LossAndGradient lg =
      LocalQLoss(q, target, data, pi_old, mu, temps, cql_weight, gamma);
  optimizer.Apply(q.values(), lg.gradient);
}

void SoftTargetUpdate(LocalQTable& target, const LocalQTable& online, double tau) {
  if (target.num_states() != online.num_states() ||
      target.num_actions() != online.num_actions()) {
    throw std::invalid_argument("soft target update: table shapes differ");
  }
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("soft target update: tau must lie in (0, 1]");
  }
  std::vector<double>& t = target.values();
  const std::vector<double>& o = online.values();
  for (size_t k = 0; k < t.size(); ++k) t[k] = (1.0 - tau) * t[k] + tau * o[k];
}

std::vector<double> ExtractionWeights(const LocalQTable& target,
                                      const ResampledDataset& data,
                                      const FactoredPolicy& pi_old,
                                      const BehaviorModel& mu, Temperatures temps,
                                      double clip) {
  const double tau = temps.alpha + temps.beta;
  if (!(tau > 0.0)) throw std::invalid_argument("alpha + beta must be positive");
  const int i = target.agent();
  std::vector<double> w(data.multiplicities.size(), 0.0);
  for (size_t r = 0; r < w.size(); ++r) {
    const TransitionRecord& rec = data.base->records[r];
    const int s = rec.state;
    const int a = rec.joint_action.per_agent[i];
    std::span<const double> pi = pi_old.Row(i, s);
    double baseline = 0.0;
    for (size_t b = 0; b < pi.size(); ++b) baseline += pi[b] * target(s, static_cast<int>(b));
    const double adv = target(s, a) - baseline;
    const double x = (adv - temps.beta * FlooredLog(mu.factored.Prob(i, s, a))) / tau;
    w[r] = std::exp(std::clamp(x, -clip, clip));
  }
  return w;
}

LossAndGradient ExtractionLoss(const SoftmaxPolicyParams& params, int agent,
                               const ResampledDataset& data,
                               std::span<const double> weights) {
  const LocalQTable& logits = params.logits[agent];
  const int S = logits.num_states();
  const int A = logits.num_actions();
  LossAndGradient out;
  out.gradient.assign(logits.values().size(), 0.0);
  const double total = TotalMultiplicity(data);
  if (total <= 0.0) return out;
  // c[s][a]: summed multiplicity times weight of records at (s, a).
  std::vector<double> c(static_cast<size_t>(S) * A, 0.0);
  std::vector<double> state_mass(S, 0.0);
  for (size_t r = 0; r < data.multiplicities.size(); ++r) {
    const int m = data.multiplicities[r];
    if (m == 0) continue;
    const TransitionRecord& rec = data.base->records[r];
    const double x = m * weights[r];
    c[static_cast<size_t>(rec.state) * A + rec.joint_action.per_agent[agent]] += x;
    state_mass[rec.state] += x;
  }
  for (int s = 0; s < S; ++s) {
    if (state_mass[s] == 0.0) continue;
    const std::vector<double> pi = params.Probabilities(agent, s);
    for (int b = 0; b < A; ++b) {
      const size_t k = static_cast<size_t>(s) * A + b;
      if (c[k] > 0.0) out.loss -= c[k] * std::log(pi[b]);
      if (params.mask[agent][k]) out.gradient[k] = state_mass[s] * pi[b] - c[k];
    }
  }
  out.loss /= total;
  for (double& g : out.gradient) g /= total;
  return out;
}

void PolicyExtractionStep(SoftmaxPolicyParams& params, int agent,
                          const ResampledDataset& data,
                          std::span<const double> weights, Optimizer& optimizer) {
  LossAndGradient lg = ExtractionLoss(params, agent, data, weights);
  optimizer.Apply(params.logits[agent].values(), lg.gradient);
}

AutoAlphaState AutoAlphaStep(const AutoAlphaState& state,
                             std::span<const double> kl_per_agent) {
  double total = 0.0;
  for (double kl : kl_per_agent) {
    if (!std::isfinite(kl)) throw NumericError("KL estimate is not finite");
    total += kl;
  }
  AutoAlphaState out = state;
  const double excess =
      total - static_cast<double>(kl_per_agent.size()) * state.target_kl;
  out.alpha = std::clamp(state.alpha + state.step_size * excess, state.alpha_min,
                         state.alpha_max);
  return out;
}

OfflineDataset AggregateRecords(const OfflineDataset& dataset) {
  OfflineDataset out;
  out.game_fingerprint = dataset.game_fingerprint;
  out.generation_spec = dataset.generation_spec;
  std::map<std::tuple<int, int, double, int, bool>, size_t> index;
  for (const TransitionRecord& r : dataset.records) {
    auto key = std::make_tuple(r.state, r.joint_action.flat_index, r.reward,
                               r.next_state, r.done);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, out.records.size());
      out.records.push_back(r);
    } else {
      out.records[it->second].weight += r.weight;
    }
  }
  return out;
}

namespace {

std::vector<double> MeanKl(const FactoredPolicy& policy, const BehaviorModel& mu) {
  const std::vector<double> d = mu.StateDistribution();
  const auto kl = KlToBehavior(policy, mu);
  std::vector<double> out(kl.size(), 0.0);
  for (size_t i = 0; i < kl.size(); ++i) {
    for (size_t s = 0; s < d.size(); ++s) out[i] += d[s] * kl[i][s];
  }
  return out;
}

}  // namespace

PracticalResult PracticalSolve(const OfflineDataset& dataset,
                               const BehaviorModel& mu, const GameShape& shape,
                               const PracticalConfig& config) {
  if (dataset.records.empty()) throw ConfigError("practical solver needs data");
  config.schedule.Validate();
  if (config.inner_steps <= 0) throw ConfigError("inner_steps must be positive");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(config.tau > 0.0 && config.tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (config.cql_weight < 0.0) throw ConfigError("cql_weight must be nonnegative");
  if (config.auto_alpha && !(config.auto_alpha_state.alpha_min > 0.0 &&
                             config.auto_alpha_state.alpha_min <=
                                 config.auto_alpha_state.alpha_max)) {
    throw ConfigError("auto-alpha bounds need 0 < alpha_min <= alpha_max");
  }
  const int N = shape.num_agents();
  const int S = shape.num_states;
  const OfflineDataset data = AggregateRecords(dataset);
  const int size = std::max(static_cast<int>(dataset.records.size()),
                            config.min_resample_size);

  SoftmaxPolicyParams params = SoftmaxPolicyParams::FromBehavior(mu);
  std::vector<LocalQTable> q, target;
  std::vector<Optimizer> q_opt, pi_opt;
  for (int i = 0; i < N; ++i) {
    q.emplace_back(i, S, shape.actions_per_agent[i]);
    target.push_back(q.back());
    q_opt.emplace_back(config.optimizer, q.back().values().size(),
                       config.learning_rate);
    pi_opt.emplace_back(config.optimizer, q.back().values().size(),
                        config.learning_rate);
  }
  Rng order_rng(DeriveSeed(config.seed, kOrderStream));
  Rng resample_rng(DeriveSeed(config.seed, kResampleStream));
  AutoAlphaState alpha_state = config.auto_alpha_state;
  alpha_state.alpha = config.schedule.alpha;
  const std::vector<double> d = mu.StateDistribution();

  PracticalResult result;
  for (int k = 0; k < config.max_iterations; ++k) {
    Temperatures temps{config.auto_alpha ? alpha_state.alpha : config.schedule.alpha,
                       config.ablations.no_entropy ? 0.0 : config.schedule.BetaAt(k)};
    const FactoredPolicy old_policy = params.ToPolicy();
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    if (config.order == OrderMode::kRandom) {
      order = order_rng.Permutation(N);
    } else if (config.order == OrderMode::kSemiGreedy) {
      std::vector<double> score(N, 0.0);
      for (int i = 0; i < N; ++i) {
        for (int s = 0; s < S; ++s) {
          if (d[s] == 0.0) continue;
          std::span<const double> pi = old_policy.Row(i, s);
          double mean = 0.0;
          for (size_t a = 0; a < pi.size(); ++a) mean += pi[a] * target[i](s, a);
          double best = -std::numeric_limits<double>::infinity();
          for (size_t a = 0; a < pi.size(); ++a) {
            if (InSupport(mu.factored.Prob(i, s, a))) {
              best = std::max(best, target[i](s, a) - mean);
            }
          }
          score[i] += d[s] * best;
        }
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](int x, int y) { return score[x] > score[y]; });
    }

    SoftmaxPolicyParams next = params;
    SoftmaxPolicyParams& dest = config.ablations.simultaneous ? next : params;
    double rho_mean = 0.0;
    for (int i : order) {
      const FactoredPolicy teammates =
          config.ablations.simultaneous ? old_policy : params.ToPolicy();
      std::vector<double> rho(data.records.size());
      double wsum = 0.0, wrho = 0.0;
      for (size_t r = 0; r < rho.size(); ++r) {
        rho[r] = ComputeRho(teammates, mu, data.records[r], i);
        wsum += data.records[r].weight;
        wrho += data.records[r].weight * rho[r];
      }
      rho_mean += wrho / wsum / N;
      const ResampledDataset rs = Resample(data, std::move(rho), size, resample_rng);
      for (int m = 0; m < config.inner_steps; ++m) {
        LocalQStep(q[i], target[i], rs, old_policy, mu, temps, config.cql_weight,
                   shape.gamma, q_opt[i]);
        SoftTargetUpdate(target[i], q[i], config.tau);
      }
      const std::vector<double> w =
          ExtractionWeights(target[i], rs, old_policy, mu, temps, config.exponent_clip);
      for (int m = 0; m < config.inner_steps; ++m) {
        PolicyExtractionStep(dest, i, rs, w, pi_opt[i]);
      }
    }
    if (config.ablations.simultaneous) params = std::move(next);

    const FactoredPolicy policy = params.ToPolicy();
    TraceRow row;
    row.iteration = k;
    row.alpha = temps.alpha;
    row.beta = temps.beta;
    row.order = order;
    row.kl = KlToBehavior(policy, mu);
    row.entropy = JointEntropy(policy);
    row.v.assign(S, 0.0);
    row.qre_residual.assign(S, 0.0);
    for (int s = 0; s < S; ++s) {
      if (!mu.visited[s]) continue;
      for (int i = 0; i < N; ++i) {
        std::span<const double> pi = policy.Row(i, s);
        double h = 0.0, e = 0.0;
        for (size_t a = 0; a < pi.size(); ++a) {
          if (pi[a] > 0.0) h -= pi[a] * FlooredLog(pi[a]);
          e += pi[a] * target[i](s, a);
        }
        row.v[s] += (e - temps.alpha * row.kl[i][s] + temps.beta * h) / N;
        const std::vector<double> br =
            ClosedFormUpdate(target[i].Row(s), mu.factored.Row(i, s), temps);
        double tv = 0.0;
        for (size_t a = 0; a < br.size(); ++a) tv += std::abs(br[a] - pi[a]);
        row.qre_residual[s] = std::max(row.qre_residual[s], 0.5 * tv);
      }
    }
    row.v_before = row.v;
    row.policy_change = MaxTotalVariation(policy, old_policy);
    row.mean_rho = rho_mean;
    result.trace.rows.push_back(std::move(row));
    if (config.auto_alpha) {
      alpha_state = AutoAlphaStep(alpha_state, MeanKl(policy, mu));
    }
  }
  result.policy = params.ToPolicy();
  result.local_q = target;
  result.final_alpha = config.auto_alpha ? alpha_state.alpha : config.schedule.alpha;
  result.iterations = config.max_iterations;
  return result;
}

}  // namespace inspo
