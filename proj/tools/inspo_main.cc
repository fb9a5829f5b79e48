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

// Command-line front end: gen-data, solve, eval and reproduce.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "inspo/analysis.h"
#include "inspo/data.h"
#include "inspo/environments.h"
#include "inspo/errors.h"
#include "inspo/exact_solver.h"
#include "inspo/experiment.h"
#include "inspo/game_io.h"
#include "inspo/practical_solver.h"

namespace fs = std::filesystem;
using namespace inspo;

namespace {

std::string DefaultOutDir() {
  const char* env = std::getenv("INSPO_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : "out";
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

struct GameOptions {
  std::string env;
  std::string game_path;
  double mne_off_diagonal = kDefaultMneOffDiagonal;

  void Add(CLI::App* cmd) {
    cmd->add_option("--env", env, "Environment: xor, mne or bridge");
    cmd->add_option("--game", game_path, "Game JSON file (instead of --env)");
    cmd->add_option("--mne-off-diagonal", mne_off_diagonal,
                    "Off-diagonal reward of the M-NE matrix");
  }

  Environment Resolve(const std::string& variant = "") const {
    if (!game_path.empty()) {
      if (!fs::exists(game_path)) {
        throw ConfigError("game file not found: " + game_path);
      }
      return {"custom", LoadGame(game_path), std::nullopt};
    }
    std::string name = env;
    if (name.empty() && !variant.empty()) name = EnvironmentOfVariant(variant);
    if (name.empty()) throw ConfigError("one of --env or --game is required");
    return MakeEnvironment(name, mne_off_diagonal);
  }
};

struct SolveOptions {
  GameOptions game;
  std::string dataset_path;
  std::string variant;
  std::string mode = "exact";
  std::vector<uint64_t> seeds = {0};
  std::string out_dir;
  std::vector<std::string> ablations;
  std::string order = "random";
  std::string optimizer = "adam";
  std::string auto_alpha = "off";
  std::string evaluation = "direct";
  double alpha = 0, beta0 = 0, beta_decay = 0, lr = 0, tau = 0, cql = 0,
         clip = 0, target_kl = 0, policy_tol = 0;
  int iterations = 0, inner_steps = 0, min_resample = 0;
  CLI::App* cmd = nullptr;

  bool Given(const std::string& name) const { return cmd->count(name) > 0; }
};

OfflineDataset LoadOrGenerate(const Environment& env, const std::string& path,
                              const std::string& variant, uint64_t seed) {
  if (!path.empty()) {
    if (!fs::exists(path)) throw ConfigError("dataset file not found: " + path);
    return LoadDataset(path, env.game);
  }
  if (variant.empty()) throw ConfigError("one of --dataset or --variant is required");
  return MakePresetDataset(env, variant, seed);
}

Ablations ParseAblations(const std::vector<std::string>& names) {
  Ablations a;
  for (const auto& n : names) {
    if (n == "no-entropy") {
      a.no_entropy = true;
    } else if (n == "simultaneous") {
      a.simultaneous = true;
    } else {
      throw ConfigError("unknown ablation '" + n +
                        "' (expected no-entropy or simultaneous)");
    }
  }
  return a;
}

int RunSolve(const SolveOptions& o) {
  const Environment env = o.game.Resolve(o.variant);
  const SolverMode mode = ParseSolverMode(o.mode);
  if (o.seeds.empty()) throw ConfigError("--seeds must list at least one seed");
  const Ablations ablations = ParseAblations(o.ablations);
  const OrderMode order = ParseOrderMode(o.order);
  const fs::path out = o.out_dir.empty() ? fs::path(DefaultOutDir()) : fs::path(o.out_dir);

  ExactSolverConfig exact = DefaultExactConfig(env.name);
  PracticalConfig practical = DefaultPracticalConfig(env.name);
  TemperatureSchedule& es = exact.schedule;
  TemperatureSchedule& ps = practical.schedule;
  if (o.Given("--alpha")) es.alpha = ps.alpha = o.alpha;
  if (o.Given("--beta0")) es.beta0 = ps.beta0 = o.beta0;
  if (o.Given("--beta-decay")) es.beta_decay = ps.beta_decay = o.beta_decay;
  if (o.Given("--iterations")) {
    exact.max_iterations = practical.max_iterations = o.iterations;
  }
  if (o.Given("--policy-tol")) exact.policy_tol = o.policy_tol;
  if (o.evaluation == "iterative") {
    exact.evaluation.method = EvaluationMethod::kIterative;
  } else if (o.evaluation != "direct") {
    throw ConfigError("unknown evaluation '" + o.evaluation +
                      "' (expected direct or iterative)");
  }
  exact.order = practical.order = order;
  exact.ablations = practical.ablations = ablations;
  if (o.Given("--inner-steps")) practical.inner_steps = o.inner_steps;
  if (o.Given("--lr")) practical.learning_rate = o.lr;
  if (o.Given("--tau")) practical.tau = o.tau;
  if (o.Given("--cql")) practical.cql_weight = o.cql;
  if (o.Given("--clip")) practical.exponent_clip = o.clip;
  if (o.Given("--min-resample")) practical.min_resample_size = o.min_resample;
  if (o.optimizer == "sgd") {
    practical.optimizer = OptimizerKind::kSgd;
  } else if (o.optimizer != "adam") {
    throw ConfigError("unknown optimizer '" + o.optimizer + "' (expected adam or sgd)");
  }
  if (o.auto_alpha != "on" && o.auto_alpha != "off") {
    throw ConfigError("--auto-alpha must be on or off");
  }
  practical.auto_alpha = o.auto_alpha == "on";
  practical.auto_alpha_state.alpha = ps.alpha;
  if (o.Given("--target-kl")) practical.auto_alpha_state.target_kl = o.target_kl;
  es.Validate();
  ps.Validate();
  if (exact.max_iterations < 1) throw ConfigError("--iterations must be at least 1");

  const int n = static_cast<int>(o.seeds.size());
  const auto runs = ParallelMap<RunOutput>(n, [&](int k) {
    const uint64_t seed = o.seeds[k];
    const OfflineDataset data = LoadOrGenerate(env, o.dataset_path, o.variant, seed);
    if (mode == SolverMode::kExact) {
      ExactSolverConfig c = exact;
      c.seed = seed;
      return RunExact(env, data, c);
    }
    PracticalConfig c = practical;
    c.seed = seed;
    return RunPractical(env, data, c);
  });

  fs::create_directories(out);
  std::ostringstream summary;
  summary << "seed,expected_return,greedy_return,iterations,converged\n";
  for (int k = 0; k < n; ++k) {
    const std::string tag = "seed" + std::to_string(o.seeds[k]);
    SavePolicy(runs[k].policy, (out / ("policy_" + tag + ".json")).string());
    WriteText(out / ("trace_" + tag + ".csv"),
              TraceCsv(runs[k].trace, mode == SolverMode::kPractical));
    char line[160];
    std::snprintf(line, sizeof(line), "%llu,%.6f,%.6f,%d,%d\n",
                  static_cast<unsigned long long>(o.seeds[k]),
                  runs[k].expected_return, runs[k].greedy_return,
                  runs[k].iterations, runs[k].converged ? 1 : 0);
    summary << line;
  }
  WriteText(out / "summary.csv", summary.str());
  std::cout << summary.str();
  return 0;
}

int RunGenData(const GameOptions& game, const std::string& variant,
               uint64_t seed, const std::string& out_path,
               const std::string& out_dir, const std::string& game_out) {
  const Environment env = game.Resolve(variant);
  const OfflineDataset data = MakePresetDataset(env, variant, seed);
  fs::path path = out_path;
  if (path.empty()) {
    const fs::path dir = out_dir.empty() ? fs::path(DefaultOutDir()) : fs::path(out_dir);
    path = dir / (variant + "-seed" + std::to_string(seed) + ".jsonl");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  SaveDataset(data, path.string());
  if (!game_out.empty()) SaveGame(env.game, game_out);
  std::cout << path.string() << ": " << data.records.size() << " records, "
            << data.num_trajectories() << " trajectories\n";
  return 0;
}

int RunEval(const GameOptions& game, const std::string& policy_path,
            int episodes, uint64_t seed, const std::string& dataset_path,
            std::optional<double> alpha, double beta) {
  const Environment env = game.Resolve();
  if (!fs::exists(policy_path)) throw ConfigError("policy file not found: " + policy_path);
  const FactoredPolicy policy = LoadPolicy(policy_path);
  if (policy.num_states() != env.game.num_states() ||
      policy.actions_per_agent() != env.game.actions_per_agent()) {
    throw ConfigError("policy shape does not match the game");
  }
  const RolloutStats stats = RolloutReturn(env.game, policy, episodes, seed);
  std::printf("exact_return,%.6f\n", ExactReturn(env.game, policy));
  std::printf("greedy_return,%.6f\n", ExactReturn(env.game, GreedyPolicy(policy)));
  std::printf("rollout_mean,%.6f\nrollout_std,%.6f\n", stats.mean, stats.std);
  std::printf("rollout_undiscounted_mean,%.6f\nrollout_undiscounted_std,%.6f\n",
              stats.undiscounted_mean, stats.undiscounted_std);
  if (!dataset_path.empty()) {
    if (!fs::exists(dataset_path)) {
      throw ConfigError("dataset file not found: " + dataset_path);
    }
    const OfflineDataset data = LoadDataset(dataset_path, env.game);
    const BehaviorModel mu = EstimateBehavior(data, ShapeOf(env.game));
    const double a = alpha.value_or(DefaultExactConfig(env.name).schedule.alpha);
    const QreResidualReport qre = QreResidual(env.game, policy, mu, {a, beta});
    std::printf("qre_max_gap,%.3e\n", qre.max_gap);
  }
  return 0;
}

int RunReproduce(const std::string& target, const std::vector<uint64_t>& seeds,
                 const std::string& out_dir) {
  const fs::path out = out_dir.empty() ? fs::path(DefaultOutDir()) : fs::path(out_dir);
  if (target == "figure6") {
    const Figure6Output fig = ReproduceFigure6(seeds);
    WriteText(out / "figure6_grid.csv", fig.grid_csv);
    WriteText(out / "figure6.csv", fig.summary.Csv());
    WriteText(out / "figure6.md", fig.summary.Markdown());
    std::cout << fig.summary.Markdown();
    return 0;
  }
  const ResultTable table = ReproduceTable(target, seeds);
  WriteText(out / (target + ".csv"), table.Csv());
  WriteText(out / (target + ".md"), table.Markdown());
  std::cout << table.Markdown();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular offline cooperative MARL with sequential policy updates"};
  app.set_config("--config", "", "Config file (TOML/INI, one section per subcommand)");
  app.require_subcommand(1);

  // gen-data
  CLI::App* gen = app.add_subcommand("gen-data", "Generate an offline dataset");
  GameOptions gen_game;
  gen_game.Add(gen);
  std::string gen_variant, gen_out, gen_out_dir, gen_game_out;
  uint64_t gen_seed = 0;
  gen->add_option("--variant", gen_variant,
                  "xor-a|xor-b|xor-c|mne-balanced|mne-imbalanced|bridge-optimal|"
                  "bridge-mixed")
      ->required();
  gen->add_option("--seed", gen_seed, "Rollout seed (Bridge only)");
  gen->add_option("--out", gen_out, "Output JSONL path");
  gen->add_option("--out-dir", gen_out_dir, "Output directory");
  gen->add_option("--game-out", gen_game_out, "Also write the game as JSON");

  // solve
  CLI::App* solve = app.add_subcommand("solve", "Run InSPO on a dataset");
  SolveOptions so;
  so.cmd = solve;
  so.game.Add(solve);
  solve->add_option("--dataset", so.dataset_path, "Dataset JSONL file");
  solve->add_option("--variant", so.variant, "Preset dataset generated per seed");
  solve->add_option("--mode", so.mode, "exact or practical");
  solve->add_option("--seeds,--seed", so.seeds, "Seeds")->delimiter(',');
  solve->add_option("--out-dir", so.out_dir, "Output directory");
  solve->add_option("--ablation", so.ablations, "no-entropy, simultaneous");
  solve->add_option("--order", so.order, "random, fixed or semi-greedy");
  solve->add_option("--alpha", so.alpha, "KL temperature");
  solve->add_option("--beta0", so.beta0, "Initial entropy temperature");
  solve->add_option("--beta-decay", so.beta_decay, "Entropy decay per iteration");
  solve->add_option("--iterations", so.iterations, "Outer iterations K");
  solve->add_option("--policy-tol", so.policy_tol, "Convergence threshold (exact)");
  solve->add_option("--evaluation", so.evaluation, "direct or iterative (exact)");
  solve->add_option("--inner-steps", so.inner_steps, "Gradient steps M");
  solve->add_option("--lr", so.lr, "Learning rate");
  solve->add_option("--optimizer", so.optimizer, "adam or sgd");
  solve->add_option("--tau", so.tau, "Target network rate");
  solve->add_option("--cql", so.cql, "Conservative penalty weight");
  solve->add_option("--clip", so.clip, "Exponent clip of extraction weights");
  solve->add_option("--min-resample", so.min_resample, "Minimum resample size");
  solve->add_option("--auto-alpha", so.auto_alpha, "on or off");
  solve->add_option("--target-kl", so.target_kl, "Auto-alpha KL target per agent");

  // eval
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a policy file");
  GameOptions eval_game;
  eval_game.Add(eval);
  std::string eval_policy, eval_dataset;
  int eval_episodes = 32;
  uint64_t eval_seed = 0;
  double eval_alpha = 0.0, eval_beta = 0.0;
  eval->add_option("--policy", eval_policy, "Policy JSON file")->required();
  eval->add_option("--episodes", eval_episodes, "Rollout episodes");
  eval->add_option("--seed", eval_seed, "Rollout seed");
  eval->add_option("--dataset", eval_dataset,
                   "Dataset for the regularized QRE residual");
  CLI::Option* eval_alpha_opt =
      eval->add_option("--alpha", eval_alpha, "KL temperature for the residual");
  eval->add_option("--beta", eval_beta, "Entropy temperature for the residual");

  // reproduce
  CLI::App* repro = app.add_subcommand("reproduce", "Rebuild a results table");
  std::string repro_target, repro_out;
  std::vector<uint64_t> repro_seeds = {0, 1, 2, 3, 4};
  repro->add_option("target", repro_target, "table1|table2|table3|figure6")
      ->required();
  repro->add_option("--seeds", repro_seeds, "Seeds")->delimiter(',');
  repro->add_option("--out-dir", repro_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      return RunGenData(gen_game, gen_variant, gen_seed, gen_out, gen_out_dir,
                        gen_game_out);
    }
    if (*solve) return RunSolve(so);
    if (*eval) {
      std::optional<double> alpha;
      if (eval_alpha_opt->count() > 0) alpha = eval_alpha;
      return RunEval(eval_game, eval_policy, eval_episodes, eval_seed,
                     eval_dataset, alpha, eval_beta);
    }
    if (*repro) return RunReproduce(repro_target, repro_seeds, repro_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const SupportError& e) {
    std::cerr << "support error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
