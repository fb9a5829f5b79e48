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

#ifndef INSPO_EXPERIMENT_H_
#define INSPO_EXPERIMENT_H_

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "inspo/data.h"
#include "inspo/environments.h"
#include "inspo/exact_solver.h"
#include "inspo/game.h"
#include "inspo/practical_solver.h"

namespace inspo {

struct Environment {
  std::string name;  // xor, mne or bridge
  TabularGame game;
  std::optional<BridgeLayout> layout;
};

Environment MakeEnvironment(const std::string& name,
                            double mne_off_diagonal = kDefaultMneOffDiagonal,
                            const BridgeLayout& layout = BridgeLayout());

// xor for xor-*, mne for mne-*, bridge for bridge-*.
std::string EnvironmentOfVariant(const std::string& variant);

// Matrix presets ignore the seed.
OfflineDataset MakePresetDataset(const Environment& env,
                                 const std::string& variant, uint64_t seed);

ExactSolverConfig DefaultExactConfig(const std::string& env_name);
PracticalConfig DefaultPracticalConfig(const std::string& env_name);

enum class SolverMode { kExact, kPractical };
SolverMode ParseSolverMode(const std::string& name);

struct RunOutput {
  FactoredPolicy policy;
  SolverTrace trace;
  bool converged = false;
  int iterations = 0;
  double expected_return = 0.0;
  double greedy_return = 0.0;
  double seconds = 0.0;
};

RunOutput RunExact(const Environment& env, const OfflineDataset& dataset,
                   const ExactSolverConfig& config);
RunOutput RunPractical(const Environment& env, const OfflineDataset& dataset,
                       const PracticalConfig& config);

// Per agent and state, all mass on the first most likely action.
FactoredPolicy GreedyPolicy(const FactoredPolicy& policy);

// One line per (iteration, state). The kl column sums over agents.
std::string TraceCsv(const SolverTrace& trace, bool practical);

// Runs fn(k) for k in [0, n) on up to hardware_concurrency threads; results
// keep the index order.
template <typename T>
std::vector<T> ParallelMap(int n, const std::function<T(int)>& fn) {
  std::vector<T> out(n);
  const int workers =
      std::max(1, std::min<int>(n, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int k = w; k < n; k += workers) {
        try {
          out[k] = fn(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct ResultRow {
  std::string env;
  std::string dataset;
  std::string method;
  std::vector<uint64_t> seeds;
  std::vector<double> returns;
  std::vector<double> greedy_returns;
  double mean = 0.0;
  double std = 0.0;
};

// Fills mean and population std over the listed seeds.
void Summarize(ResultRow& row);

struct ResultTable {
  std::string title;
  std::vector<std::string> datasets;  // column order
  std::vector<std::string> methods;   // row order
  std::vector<ResultRow> rows;
  std::vector<std::string> footnotes;

  const ResultRow* Find(const std::string& dataset,
                        const std::string& method) const;
  std::string Csv() const;
  std::string Markdown() const;
};

// table1 (XOR), table2 (M-NE) or table3 (Bridge).
ResultTable ReproduceTable(const std::string& target,
                           const std::vector<uint64_t>& seeds);

struct Figure6Output {
  // run, seed, action_0, action_1, probability
  std::string grid_csv;
  ResultTable summary;
};

// Converged joint-policy grids for the no-entropy run on M-NE imbalanced and
// the simultaneous-update run on XOR (b), exact mode.
Figure6Output ReproduceFigure6(const std::vector<uint64_t>& seeds);

}  // namespace inspo

#endif  // INSPO_EXPERIMENT_H_
