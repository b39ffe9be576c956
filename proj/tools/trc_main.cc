// Copyright 2026 The TRC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// trc: dataset generation, training, evaluation and inference.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error. Diagnostics are a
// single line on stderr.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trc/analysis.h"
#include "trc/checkpoint.h"
#include "trc/config_io.h"
#include "trc/dataset_io.h"
#include "trc/dynamics.h"
#include "trc/errors.h"
#include "trc/oracle.h"
#include "trc/runtime.h"
#include "trc/training.h"

namespace trc {
namespace {

namespace fs = std::filesystem;

constexpr uint64_t kDefaultSeed = 42;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string OneLine(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

// --seed, else the config value, else TRC_SEED, else the default.
uint64_t ResolveSeed(const std::optional<uint64_t>& flag,
                     const std::optional<uint64_t>& config) {
  if (flag) return *flag;
  if (config) return *config;
  if (const char* env = std::getenv("TRC_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("TRC_SEED is not an integer: '{}'", env));
    }
  }
  return kDefaultSeed;
}

Eigen::VectorXd ParseCsvVector(const std::string& text,
                               const std::string& flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      throw UsageError(fmt::format("{} expects comma-separated numbers, got '{}'",
                                   flag, text));
    }
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
}

void CheckStateDim(const Eigen::VectorXd& v, const ControlProblem& p,
                   const std::string& flag) {
  if (v.size() != p.state_dim) {
    throw DimensionError(fmt::format("{} has {} values but the {} state has {}",
                                     flag, v.size(), SystemName(p.system),
                                     p.state_dim));
  }
}

ControlProblem NamedProblem(const std::string& name) {
  const SystemId id = SystemFromName(name);
  if (id == SystemId::kVanDerPol) return VanDerPolProblem();
  if (id == SystemId::kRocket) return RocketProblem();
  throw UsageError("--problem must be vdp or rocket");
}

Json ControlsJson(const Eigen::MatrixXd& u) { return ToJson(u); }

void WriteText(const fs::path& path, const std::string& text) {
  WriteFileAtomic(path.string(), text);
}

struct GenDataArgs {
  std::string problem;
  int n = 0;
  std::optional<uint64_t> seed;
  std::string out;
  std::string oracle_config;
  std::string problem_config;
};

int GenData(const GenDataArgs& a) {
  ControlProblem problem = NamedProblem(a.problem);
  if (!a.problem_config.empty()) {
    Json j = ReadJsonFile(a.problem_config);
    j["system"] = SystemName(problem.system);
    problem = ProblemFromJson(j);
  }
  OracleConfig oracle;
  std::optional<uint64_t> config_seed;
  if (!a.oracle_config.empty()) {
    const Json j = ReadJsonFile(a.oracle_config);
    oracle = OracleConfigFromJson(j);
    if (j.contains("seed")) config_seed = oracle.seed;
  }
  if (a.n < 1) throw UsageError("--n must be >= 1");
  const uint64_t seed = ResolveSeed(a.seed, config_seed);
  oracle.seed = seed;
  const Dataset d = GenerateDataset(problem, a.n, oracle, seed);
  WriteDataset(a.out, d);
  std::cerr << fmt::format(
      "wrote {} samples to {} ({} failed, {} converged)\n", d.samples.size(),
      a.out, d.failure_count, d.converged_count);
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
};

int TrainCommand(const TrainArgs& a) {
  const Dataset data = ReadDataset(a.data);
  Json config = Json::object();
  if (!a.config.empty()) config = ReadJsonFile(a.config);
  for (auto it = config.begin(); it != config.end(); ++it) {
    if (it.key() != "model" && it.key() != "train") {
      throw ContractError("unknown key '" + it.key() +
                          "' in training config (expected model, train)");
    }
  }
  const TrcConfig model_config = TrcConfigFromJson(
      config.value("model", Json::object()),
      TrcConfig::ForProblem(data.problem));
  const Json train_json = config.value("train", Json::object());
  TrainConfig train_config = TrainConfigFromJson(
      train_json, TrainConfig::ForProblem(data.problem));
  std::optional<uint64_t> config_seed;
  if (train_json.contains("seed")) config_seed = train_config.seed;
  train_config.seed = ResolveSeed(a.seed, config_seed);

  const fs::path out(a.out);
  fs::create_directories(out);
  std::vector<MetricsRecord> history;
  auto on_epoch = [&](const MetricsRecord& r) {
    history.push_back(r);
    WriteText(out / "training_metrics.csv", MetricsCsv(history));
    std::cerr << fmt::format(
        "epoch {}/{} control_loss={:.6g} improvement={:.4f} total={:.6g} "
        "val={:.6g} lr={:.3g}\n",
        r.epoch + 1, train_config.epochs, r.control_loss,
        r.improvement_metric, r.total_loss, r.validation_loss,
        r.learning_rate);
  };
  const TrainResult result =
      Train(data.problem, data.samples, model_config, train_config, on_epoch);
  SaveCheckpoint((out / "final.ckpt").string(), result.final_model,
                 train_config, result.history);
  SaveCheckpoint((out / "best.ckpt").string(), result.best_model,
                 train_config, result.history);
  std::cerr << fmt::format("saved final.ckpt and best.ckpt (epoch {}) to {}\n",
                           result.best_epoch + 1, a.out);
  return 0;
}

Checkpoint LoadCompatible(const std::string& ckpt_path, const Dataset& data) {
  Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  ckpt.model.config().CheckCompatible(data.problem);
  if (ckpt.model.problem().system != data.problem.system) {
    throw DimensionError(fmt::format(
        "checkpoint is for {} but the dataset is {}",
        SystemName(ckpt.model.problem().system),
        SystemName(data.problem.system)));
  }
  return ckpt;
}

int EvalCommand(const std::string& ckpt_path, const std::string& data_path,
                const std::string& report_dir) {
  const Dataset data = ReadDataset(data_path);
  const Checkpoint ckpt = LoadCompatible(ckpt_path, data);
  const EvalReport report = Evaluate(ckpt.model, data.samples);
  const fs::path dir(report_dir);
  fs::create_directories(dir);
  WriteText(dir / "summary.json", SummaryJson(report).dump(2) + "\n");
  WriteText(dir / "refinement.csv", RefinementCsv(report));
  WriteText(dir / "refinement_quantiles.csv", RefinementQuantilesCsv(report));
  if (report.num_samples >= 2) {
    WriteText(dir / "latents.csv", LatentsCsv(report));
  }
  WriteText(dir / "training_metrics.csv", MetricsCsv(ckpt.history));
  std::cout << fmt::format(
      "samples={} cost_ratio={:.4f} mean_cost={:.6g} oracle_cost={:.6g} "
      "monotone={:.3f} improvement={:.4f}\n",
      report.num_samples, report.cost_ratio, report.mean_trc_cost,
      report.mean_oracle_cost, report.monotone_fraction,
      report.improvement_metric);
  return 0;
}

int InferCommand(const std::string& ckpt_path, const std::string& x0_text,
                 const std::string& target_text, std::optional<int> k) {
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  const ControlProblem& problem = ckpt.model.problem();
  const Eigen::VectorXd x0 = ParseCsvVector(x0_text, "--x0");
  const Eigen::VectorXd target = ParseCsvVector(target_text, "--target");
  CheckStateDim(x0, problem, "--x0");
  CheckStateDim(target, problem, "--target");
  const int iterations = k.value_or(ckpt.model.config().outer_iterations);
  if (iterations < 0) throw UsageError("--k must be >= 0");
  NoGradScope no_grad;
  const ForwardRecord record =
      ckpt.model.Forward(TileRows(x0, 1), TileRows(target, 1), iterations,
                         ckpt.model.config().inner_cycles);
  Json out;
  Json costs = Json::array();
  for (const Tensor& c : record.costs) costs.push_back(c.item());
  out["costs"] = costs;
  Json norms = Json::array();
  for (const Tensor& r : record.residual_norms) norms.push_back(r.item());
  out["residual_norms"] = norms;
  Tensor final_u = record.controls.back();
  if (problem.system == SystemId::kRocket) {
    final_u = ProjectThrust(problem, final_u);
  }
  out["controls"] = ControlsJson(ControlsMatrix(final_u));
  std::cout << out.dump() << "\n";
  return 0;
}

int OracleCommand(const std::string& problem_name, const std::string& x0_text,
                  const std::string& target_text,
                  const std::string& oracle_config,
                  std::optional<uint64_t> seed) {
  const ControlProblem problem = NamedProblem(problem_name);
  OracleConfig config;
  std::optional<uint64_t> config_seed;
  if (!oracle_config.empty()) {
    const Json j = ReadJsonFile(oracle_config);
    config = OracleConfigFromJson(j);
    if (j.contains("seed")) config_seed = config.seed;
  }
  config.seed = ResolveSeed(seed, config_seed);
  const Eigen::VectorXd x0 = ParseCsvVector(x0_text, "--x0");
  const Eigen::VectorXd target = ParseCsvVector(target_text, "--target");
  CheckStateDim(x0, problem, "--x0");
  CheckStateDim(target, problem, "--target");
  const Sample s = SolveDirectShooting(problem, x0, target, config);
  Json out;
  out["j_star"] = s.j_star;
  out["u_star"] = ControlsJson(s.u_star);
  std::cout << out.dump() << "\n";
  return 0;
}

int ExportLatentsCommand(const std::string& ckpt_path,
                         const std::string& data_path,
                         const std::string& out_path) {
  const Dataset data = ReadDataset(data_path);
  const Checkpoint ckpt = LoadCompatible(ckpt_path, data);
  const EvalReport report = Evaluate(ckpt.model, data.samples);
  Pca2d pca;
  WriteFileAtomic(out_path, LatentsCsv(report, &pca));
  std::cerr << fmt::format(
      "wrote {} rows to {} (explained variance {:.3f}, {:.3f}; collapse "
      "ratio {:.3f})\n",
      report.latents.size() * report.latents[0].size(), out_path,
      pca.explained[0], pca.explained[1], report.latent_collapse_ratio);
  return 0;
}

int Run(int argc, char** argv) {
  CLI::App app{"Tiny recursive control: data, training and inference"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Solve random problems with "
                                                 "the direct-shooting oracle");
  gen_cmd->add_option("--problem", gen.problem, "vdp or rocket")
      ->required()
      ->check(CLI::IsMember({"vdp", "rocket"}));
  gen_cmd->add_option("--n", gen.n, "Number of samples")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--out", gen.out, "Output JSONL path")->required();
  gen_cmd->add_option("--oracle-config", gen.oracle_config,
                      "Oracle settings (JSON)")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--problem-config", gen.problem_config,
                      "Problem parameter overrides (JSON)")
      ->check(CLI::ExistingFile);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", train.data, "Dataset JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--config", train.config,
                        "JSON with optional 'model' and 'train' objects")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--seed", train.seed, "Random seed");

  std::string ckpt, data, report, out, x0, target, problem, oracle_cfg;
  std::optional<int> k;
  std::optional<uint64_t> seed;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate on a dataset");
  eval_cmd->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--report", report, "Report directory")->required();

  auto* infer_cmd = app.add_subcommand("infer", "Refine controls for one state");
  infer_cmd->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--x0", x0, "Initial state, comma separated")
      ->required();
  infer_cmd->add_option("--target", target, "Target state, comma separated")
      ->required();
  infer_cmd->add_option("--k", k, "Outer iterations");

  auto* oracle_cmd = app.add_subcommand("oracle", "Solve one problem");
  oracle_cmd->add_option("--problem", problem)
      ->required()
      ->check(CLI::IsMember({"vdp", "rocket"}));
  oracle_cmd->add_option("--x0", x0)->required();
  oracle_cmd->add_option("--target", target)->required();
  oracle_cmd->add_option("--oracle-config", oracle_cfg)
      ->check(CLI::ExistingFile);
  oracle_cmd->add_option("--seed", seed);

  auto* latents_cmd =
      app.add_subcommand("export-latents", "Write PCA-projected latents");
  latents_cmd->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  latents_cmd->add_option("--data", data)->required()->check(CLI::ExistingFile);
  latents_cmd->add_option("--out", out, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "trc: " << OneLine(e.what()) << "\n";
    return 1;
  }

  try {
    if (*gen_cmd) return GenData(gen);
    if (*train_cmd) return TrainCommand(train);
    if (*eval_cmd) return EvalCommand(ckpt, data, report);
    if (*infer_cmd) return InferCommand(ckpt, x0, target, k);
    if (*oracle_cmd) return OracleCommand(problem, x0, target, oracle_cfg, seed);
    if (*latents_cmd) return ExportLatentsCommand(ckpt, data, out);
  } catch (const UsageError& e) {
    std::cerr << "trc: " << OneLine(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "trc: " << OneLine(e.what()) << "\n";
    return 2;
  }
  return 1;
}

}  // namespace
}  // namespace trc

int main(int argc, char** argv) {
  trc::ConfigureAllocator();
  return trc::Run(argc, argv);
}
