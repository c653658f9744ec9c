/* Copyright 2026 The gpcnn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
// failure, 3 failed gradient check or ablation ordering.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gpcnn/error.hpp"
#include "gpcnn/eval.hpp"
#include "gpcnn/pipeline/checkpoint.hpp"
#include "gpcnn/pipeline/config.hpp"
#include "gpcnn/pipeline/infer.hpp"
#include "gpcnn/pipeline/synth.hpp"
#include "gpcnn/pipeline/train.hpp"

namespace fs = std::filesystem;
using namespace gpcnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitCheck = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  GPCNN_REQUIRE(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

Dataset dataset_or_heldout(const std::string& path, const RunConfig& cfg) {
  return path.empty() ? heldout_dataset(cfg) : load_dataset(path);
}

int cmd_synth(const Globals& g, int count, bool heldout) {
  RunConfig cfg = resolve_config(g);
  if (count > 0) (heldout ? cfg.heldout_samples : cfg.train_samples) = count;
  const Dataset ds = heldout ? heldout_dataset(cfg) : train_dataset(cfg);
  const auto path = out_path(g, heldout ? "heldout.gpds" : "train.gpds");
  save_dataset(ds, path);
  std::cout << "wrote " << ds.samples.size() << " samples to " << path.string() << '\n';
  return kExitOk;
}

int cmd_train(const Globals& g, const std::string& data_path) {
  const RunConfig cfg = resolve_config(g);
  const Dataset train_set = data_path.empty() ? train_dataset(cfg) : load_dataset(data_path);
  const Dataset heldout = heldout_dataset(cfg);
  Model model(cfg);
  TrainOptions opts;
  opts.metrics_log = out_path(g, "metrics.jsonl");
  opts.checkpoint = out_path(g, "model.ckpt");
  opts.on_epoch = [](const EpochMetrics& m) { std::cout << m.to_json().dump() << std::endl; };
  save_config(cfg, out_path(g, "config.json"));
  train(model, train_set, heldout, opts);
  std::cout << "checkpoint: " << opts.checkpoint.string() << '\n';
  return kExitOk;
}

int cmd_infer(const Globals& g, const std::string& checkpoint, const std::string& data_path) {
  Model model = load_checkpoint(checkpoint);
  RunConfig cfg = model.config();
  if (g.seed) cfg.seed = *g.seed;
  const Dataset ds = dataset_or_heldout(data_path, cfg);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : ds.samples) out.push_back(infer(model, s.input).to_json());
  const auto path = out_path(g, "predictions.json");
  write_text(path, out.dump(1) + "\n");
  std::cout << "wrote predictions for " << ds.samples.size() << " samples to " << path.string() << '\n';
  return kExitOk;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& data_path) {
  Model model = load_checkpoint(checkpoint);
  RunConfig cfg = model.config();
  if (g.seed) cfg.seed = *g.seed;
  const EvalReport report = evaluate(model, dataset_or_heldout(data_path, cfg));
  write_text(out_path(g, "report.json"), report.to_json().dump(2) + "\n");
  write_text(out_path(g, "report.txt"), report.to_text());
  std::cout << report.to_text();
  return kExitOk;
}

int cmd_gradcheck(const Globals& g, int seeds, double tolerance, double step) {
  const RunConfig cfg = g.config_path.empty() ? tiny_config() : resolve_config(g);
  const std::uint64_t base = g.seed.value_or(cfg.seed);
  GradCheckOptions opts;
  opts.tolerance = tolerance;
  opts.step = step;
  bool ok = true;
  for (int i = 0; i < seeds; ++i) {
    const GradCheckResult r = check_model_gradients(cfg, base + static_cast<std::uint64_t>(i), opts);
    const auto* worst = r.worst();
    std::cout << "seed " << base + static_cast<std::uint64_t>(i) << ": max relative error "
              << r.max_rel_error;
    if (worst != nullptr) std::cout << " (" << worst->name << ")";
    std::cout << (r.passed ? "  ok" : "  FAILED") << '\n';
    if (!r.passed) {
      for (const auto& p : r.per_parameter) {
        if (p.max_rel_error > tolerance) {
          std::cout << "  " << p.name << "[" << p.worst_index << "] analytic " << p.analytic
                    << " numeric " << p.numeric << '\n';
        }
      }
    }
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitCheck;
}

int cmd_ablate(const Globals& g, std::optional<double> occlusion) {
  RunConfig cfg = resolve_config(g);
  if (occlusion) cfg.occlusion_rate = *occlusion;
  cfg.validate();
  const AblationResult result = run_ablation(cfg, [](const AblationRow& row) {
    std::cout << to_string(row.variant) << ": stage2 AP " << row.report.stage2.ap << std::endl;
  });
  write_text(out_path(g, "ablation.json"), result.to_json().dump(2) + "\n");
  write_text(out_path(g, "ablation.txt"), result.to_text());
  std::cout << result.to_text();
  if (!result.ordering_holds()) {
    std::cout << "ordering check failed: full is below struct_agnostic or va\n";
    return kExitCheck;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage keypoint refinement with graph pose refinement"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Run config JSON")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random stream");
  app.add_option("--out", g.out_dir, "Output directory");
  app.fallthrough();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  int count = 0;
  bool heldout = false;
  synth->add_option("--count", count, "Number of samples (default from config)");
  synth->add_flag("--heldout", heldout, "Generate the held-out split");

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  std::string data_path;
  train_cmd->add_option("--data", data_path, "Training dataset file")->check(CLI::ExistingFile);

  auto* infer_cmd = app.add_subcommand("infer", "Predict keypoints with a checkpoint");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string checkpoint;
  for (auto* sub : {infer_cmd, eval_cmd}) {
    sub->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    sub->add_option("--data", data_path, "Dataset file (default: held-out split of the stored config)")
        ->check(CLI::ExistingFile);
  }

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full objective");
  int seeds = 1;
  double tolerance = 1e-4;
  grad_cmd->add_option("--seeds", seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--tolerance", tolerance, "Maximum relative error");
  double step = kModelGradCheckStep;
  grad_cmd->add_option("--step", step, "Central-difference step")->check(CLI::PositiveNumber);

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and compare all GPR variants");
  std::optional<double> occlusion;
  ablate_cmd->add_option("--occlusion", occlusion, "Override the occlusion rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*synth) return cmd_synth(g, count, heldout);
    if (*train_cmd) return cmd_train(g, data_path);
    if (*infer_cmd) return cmd_infer(g, checkpoint, data_path);
    if (*eval_cmd) return cmd_eval(g, checkpoint, data_path);
    if (*grad_cmd) return cmd_gradcheck(g, seeds, tolerance, step);
    if (*ablate_cmd) return cmd_ablate(g, occlusion);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kCheckFailure ? kExitCheck : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
