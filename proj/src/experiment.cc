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

#include "inspo/experiment.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "inspo/analysis.h"
#include "inspo/errors.h"
#include "inspo/planning.h"

namespace inspo {
namespace {

std::string Num(double x, const char* fmt = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, x);
  return buf;
}

bool IsMatrixEnv(const std::string& name) { return name == "xor" || name == "mne"; }

const char* kBc = "BC";
const char* kExact = "InSPO (exact)";
const char* kPractical = "InSPO (practical)";
const char* kOptimal = "Optimal (value iteration)";

}  // namespace

Environment MakeEnvironment(const std::string& name, double mne_off_diagonal,
                            const BridgeLayout& layout) {
  if (name == "xor") return {name, BuildXor(), std::nullopt};
  if (name == "mne") return {name, BuildMne(mne_off_diagonal), std::nullopt};
  if (name == "bridge") return {name, BuildBridge(layout), layout};
  throw ConfigError("unknown environment '" + name +
                    "' (expected xor, mne or bridge)");
}

std::string EnvironmentOfVariant(const std::string& variant) {
  if (variant.rfind("xor-", 0) == 0) return "xor";
  if (variant.rfind("mne-", 0) == 0) return "mne";
  if (variant.rfind("bridge-", 0) == 0) return "bridge";
  throw ConfigError("unknown dataset variant '" + variant + "'");
}

OfflineDataset MakePresetDataset(const Environment& env,
                                 const std::string& variant, uint64_t seed) {
  if (EnvironmentOfVariant(variant) != env.name) {
    throw ConfigError("variant '" + variant + "' does not belong to env '" +
                      env.name + "'");
  }
  if (env.name == "bridge") {
    if (!IsBridgePreset(variant)) {
      throw ConfigError("unknown dataset variant '" + variant + "'");
    }
    return MakeBridgeDataset(env.game, *env.layout, variant, seed);
  }
  if (!IsMatrixPreset(variant)) {
    throw ConfigError("unknown dataset variant '" + variant + "'");
  }
  return MakeMatrixDataset(env.game, MatrixPresetWeights(variant), variant);
}

ExactSolverConfig DefaultExactConfig(const std::string& env_name) {
  ExactSolverConfig c;
  if (IsMatrixEnv(env_name)) {
    c.schedule = {0.1, 10.0, 0.98};
    c.max_iterations = 500;
  } else {
    c.schedule = {0.01, 1.0, 0.98};
    c.max_iterations = 2000;
  }
  return c;
}

PracticalConfig DefaultPracticalConfig(const std::string& env_name) {
  PracticalConfig c;
  if (IsMatrixEnv(env_name)) {
    c.schedule = {0.1, 10.0, 0.98};
    c.max_iterations = 500;
  } else {
    c.schedule = {0.01, 0.0, 0.98};
    c.max_iterations = 2000;
    c.cql_weight = 0.0;
  }
  return c;
}

SolverMode ParseSolverMode(const std::string& name) {
  if (name == "exact") return SolverMode::kExact;
  if (name == "practical") return SolverMode::kPractical;
  throw ConfigError("unknown solver mode '" + name +
                    "' (expected exact or practical)");
}

FactoredPolicy GreedyPolicy(const FactoredPolicy& policy) {
  FactoredPolicy out = policy;
  for (int i = 0; i < policy.num_agents(); ++i) {
    for (int s = 0; s < policy.num_states(); ++s) {
      const auto row = policy.Row(i, s);
      const int best = static_cast<int>(
          std::max_element(row.begin(), row.end()) - row.begin());
      std::vector<double> onehot(row.size(), 0.0);
      onehot[best] = 1.0;
      out.SetRow(i, s, onehot);
    }
  }
  return out;
}

RunOutput RunExact(const Environment& env, const OfflineDataset& dataset,
                   const ExactSolverConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const BehaviorModel mu = EstimateBehavior(dataset, ShapeOf(env.game));
  SolveResult res = InspoIterate(env.game, mu, config);
  RunOutput out;
  out.policy = std::move(res.policy);
  out.trace = std::move(res.trace);
  out.converged = res.converged;
  out.iterations = res.iterations;
  out.expected_return = ExactReturn(env.game, out.policy);
  out.greedy_return = ExactReturn(env.game, GreedyPolicy(out.policy));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

RunOutput RunPractical(const Environment& env, const OfflineDataset& dataset,
                       const PracticalConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const BehaviorModel mu = EstimateBehavior(dataset, ShapeOf(env.game));
  PracticalResult res = PracticalSolve(dataset, mu, ShapeOf(env.game), config);
  RunOutput out;
  out.policy = std::move(res.policy);
  out.trace = std::move(res.trace);
  out.converged = false;
  out.iterations = res.iterations;
  out.expected_return = ExactReturn(env.game, out.policy);
  out.greedy_return = ExactReturn(env.game, GreedyPolicy(out.policy));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

std::string TraceCsv(const SolverTrace& trace, bool practical) {
  std::ostringstream os;
  os << "iter,state,V,kl,entropy,qre_residual";
  if (practical) os << ",alpha,beta,mean_rho";
  os << "\n";
  for (const TraceRow& row : trace.rows) {
    for (size_t s = 0; s < row.v.size(); ++s) {
      double kl = 0.0;
      for (const auto& agent : row.kl) kl += agent[s];
      os << row.iteration << "," << s << "," << Num(row.v[s]) << "," << Num(kl)
         << "," << Num(row.entropy[s]) << "," << Num(row.qre_residual[s]);
      if (practical) {
        os << "," << Num(row.alpha) << "," << Num(row.beta) << ","
           << Num(row.mean_rho);
      }
      os << "\n";
    }
  }
  return os.str();
}

void Summarize(ResultRow& row) {
  const double n = static_cast<double>(row.returns.size());
  if (row.returns.empty()) return;
  double m = 0.0;
  for (double r : row.returns) m += r;
  m /= n;
  double var = 0.0;
  for (double r : row.returns) var += (r - m) * (r - m);
  row.mean = m;
  row.std = std::sqrt(var / n);
}

const ResultRow* ResultTable::Find(const std::string& dataset,
                                   const std::string& method) const {
  for (const ResultRow& r : rows) {
    if (r.dataset == dataset && r.method == method) return &r;
  }
  return nullptr;
}

std::string ResultTable::Csv() const {
  std::ostringstream os;
  os << "env,dataset,method,mean,std,greedy_mean,seeds,returns\n";
  for (const ResultRow& r : rows) {
    double greedy = 0.0;
    for (double g : r.greedy_returns) greedy += g;
    if (!r.greedy_returns.empty()) greedy /= r.greedy_returns.size();
    std::string seeds, returns;
    for (size_t k = 0; k < r.seeds.size(); ++k) {
      if (k) {
        seeds += ";";
        returns += ";";
      }
      seeds += std::to_string(r.seeds[k]);
      returns += Num(r.returns[k], "%.6f");
    }
    os << r.env << "," << r.dataset << "," << r.method << ","
       << Num(r.mean, "%.6f") << "," << Num(r.std, "%.6f") << ","
       << Num(greedy, "%.6f") << "," << seeds << "," << returns << "\n";
  }
  return os.str();
}

std::string ResultTable::Markdown() const {
  std::ostringstream os;
  os << "### " << title << "\n\n| Method |";
  for (const auto& d : datasets) os << " " << d << " |";
  os << "\n|---|";
  for (size_t k = 0; k < datasets.size(); ++k) os << "---|";
  os << "\n";
  for (const auto& m : methods) {
    os << "| " << m << " |";
    for (const auto& d : datasets) {
      const ResultRow* r = Find(d, m);
      if (r == nullptr) {
        os << " - |";
      } else {
        os << " " << Num(r->mean, "%.2f") << " ± " << Num(r->std, "%.2f") << " |";
      }
    }
    os << "\n";
  }
  if (!footnotes.empty()) os << "\n";
  for (const auto& f : footnotes) os << "- " << f << "\n";
  return os.str();
}

ResultTable ReproduceTable(const std::string& target,
                           const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  ResultTable table;
  std::string env_name;
  if (target == "table1") {
    env_name = "xor";
    table.title = "XOR game: expected return over seeds";
    table.datasets = {"xor-a", "xor-b", "xor-c"};
  } else if (target == "table2") {
    env_name = "mne";
    table.title = "M-NE game: expected return over seeds";
    table.datasets = {"mne-balanced", "mne-imbalanced"};
  } else if (target == "table3") {
    env_name = "bridge";
    table.title = "Bridge: expected discounted return over seeds";
    table.datasets = {"bridge-optimal", "bridge-mixed"};
    table.footnotes.push_back(
        "Absolute Bridge returns depend on the grid layout and the regenerated "
        "datasets; compare the ordering of methods, not the values.");
  } else {
    throw ConfigError("unknown reproduce target '" + target +
                      "' (expected table1, table2, table3 or figure6)");
  }
  table.methods = {kBc, kExact, kPractical};
  const Environment env = MakeEnvironment(env_name);
  if (env_name == "bridge") {
    table.methods.push_back(kOptimal);
    table.footnotes.push_back("Optimal row is the joint value-iteration return.");
  }

  struct Job {
    std::string dataset;
    std::string method;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& d : table.datasets) {
    for (const auto& m : table.methods) {
      for (uint64_t seed : seeds) jobs.push_back({d, m, seed});
    }
  }
  const auto results = ParallelMap<std::pair<double, double>>(
      static_cast<int>(jobs.size()), [&](int k) -> std::pair<double, double> {
        const Job& job = jobs[k];
        if (job.method == kOptimal) {
          const double v = StartValue(env.game, JointValueIteration(env.game).v);
          return {v, v};
        }
        const OfflineDataset data = MakePresetDataset(env, job.dataset, job.seed);
        if (job.method == kBc) {
          const BehaviorModel mu = EstimateBehavior(data, ShapeOf(env.game));
          return {ExactReturn(env.game, mu.factored),
                  ExactReturn(env.game, GreedyPolicy(mu.factored))};
        }
        if (job.method == kExact) {
          ExactSolverConfig c = DefaultExactConfig(env_name);
          c.seed = job.seed;
          const RunOutput r = RunExact(env, data, c);
          return {r.expected_return, r.greedy_return};
        }
        PracticalConfig c = DefaultPracticalConfig(env_name);
        c.seed = job.seed;
        const RunOutput r = RunPractical(env, data, c);
        return {r.expected_return, r.greedy_return};
      });
  for (const auto& d : table.datasets) {
    for (const auto& m : table.methods) {
      ResultRow row{env_name, d, m, {}, {}, {}, 0.0, 0.0};
      for (size_t k = 0; k < jobs.size(); ++k) {
        if (jobs[k].dataset != d || jobs[k].method != m) continue;
        row.seeds.push_back(jobs[k].seed);
        row.returns.push_back(results[k].first);
        row.greedy_returns.push_back(results[k].second);
      }
      Summarize(row);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

Figure6Output ReproduceFigure6(const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  struct Run {
    std::string name;
    std::string env;
    std::string dataset;
    Ablations ablations;
  };
  const std::vector<Run> runs = {
      {"no-entropy", "mne", "mne-imbalanced", {true, false}},
      {"simultaneous", "xor", "xor-b", {false, true}},
  };
  const int n = static_cast<int>(runs.size() * seeds.size());
  const auto outputs = ParallelMap<RunOutput>(n, [&](int k) {
    const Run& run = runs[k / seeds.size()];
    const Environment env = MakeEnvironment(run.env);
    ExactSolverConfig c = DefaultExactConfig(run.env);
    c.seed = seeds[k % seeds.size()];
    c.ablations = run.ablations;
    return RunExact(env, MakePresetDataset(env, run.dataset, c.seed), c);
  });

  Figure6Output out;
  std::ostringstream os;
  os << "run,dataset,seed,action_0,action_1,probability\n";
  out.summary.title = "Ablations: expected return of the converged policy";
  out.summary.methods = {"no-entropy", "simultaneous"};
  for (size_t r = 0; r < runs.size(); ++r) {
    const Environment env = MakeEnvironment(runs[r].env);
    const auto& labels = env.game.action_labels();
    out.summary.datasets.push_back(runs[r].dataset);
    ResultRow row{runs[r].env, runs[r].dataset, runs[r].name, {}, {}, {}, 0.0, 0.0};
    for (size_t k = 0; k < seeds.size(); ++k) {
      const RunOutput& o = outputs[r * seeds.size() + k];
      for (int a = 0; a < env.game.num_joint_actions(); ++a) {
        const std::vector<int> d = env.game.joint().Decode(a);
        os << runs[r].name << "," << runs[r].dataset << "," << seeds[k] << ","
           << labels[0][d[0]] << "," << labels[1][d[1]] << ","
           << Num(o.policy.JointProb(env.game.joint(), 0, a), "%.6f") << "\n";
      }
      row.seeds.push_back(seeds[k]);
      row.returns.push_back(o.expected_return);
      row.greedy_returns.push_back(o.greedy_return);
    }
    Summarize(row);
    out.summary.rows.push_back(std::move(row));
  }
  out.grid_csv = os.str();
  return out;
}

}  // namespace inspo
