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


// Acceptance suite: one PASS/FAIL line per criterion. Exits 0 only when every
// selected criterion passes.
//
//   gpcnn_acceptance [--only N] [--work DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../common/gpr_oracle.hpp"
#include "../common/op_suite.hpp"
#include "gpcnn/error.hpp"
#include "gpcnn/eval.hpp"
#include "gpcnn/geometry.hpp"
#include "gpcnn/gpr.hpp"
#include "gpcnn/pipeline/checkpoint.hpp"
#include "gpcnn/pipeline/config.hpp"
#include "gpcnn/pipeline/synth.hpp"
#include "gpcnn/pipeline/train.hpp"
#include "gpcnn/sampling.hpp"

namespace fs = std::filesystem;
using namespace gpcnn;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path g_work;

// 1. Every differentiable op and the full objective on the tiny config agree
// with central differences over >= 20 seeds, inside one minute.
Outcome gradient_suite() {
  constexpr int kSeeds = 20;
  constexpr double kTol = 1e-4;
  const auto start = Clock::now();
  const RunConfig cfg = tiny_config();
  double worst = 0.0;
  std::string worst_name = "-";
  int failures = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(1000 + s);
    for (const auto& c : testing::op_gradient_suite(seed, kTol)) {
      if (!c.result.passed) ++failures;
      if (c.result.max_rel_error > worst) worst = c.result.max_rel_error, worst_name = c.name;
    }
    GradCheckOptions opts;
    opts.tolerance = kTol;
    opts.step = kModelGradCheckStep;
    const GradCheckResult r = check_model_gradients(cfg, seed, opts);
    if (!r.passed) ++failures;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_name = r.worst() ? r.worst()->name : "objective";
    }
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && worst < kTol && elapsed < 60.0,
          fmt("%d seeds, max rel error %.2e (%s), %d failing checks, %.1f s (limit 60 s)", kSeeds, worst,
              worst_name.c_str(), failures, elapsed)};
}

// 2. The graph layer matches a scalar-loop oracle on 100 random graphs, and
// with every neighbour unreliable it returns exactly the self transform.
Outcome gpr_oracle_check() {
  Rng rng(2024);
  std::uniform_int_distribution<int> kdist(2, 6), cdist(1, 4), gdist(1, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = kdist(rng), c = cdist(rng), graphs = gdist(rng);
    ParameterStore store;
    const GprParams params = GprParams::create(store, testing::random_skeleton(k, rng), c, rng);
    for (std::size_t e = 0; e < params.edges().size(); ++e) {
      for (double& v : store[params.transform(e).weight].value.values()) v = u(rng);
      for (double& v : store[params.transform(e).bias].value.values()) v = u(rng);
    }
    const testing::GraphData data = testing::random_graphs(graphs, k, c, rng);
    for (GprVariant variant : kAllVariants) {
      const auto got = testing::gpr_library(data, params, store, variant);
      const auto want = testing::gpr_oracle(data, params, store, variant);
      if (got.size() != want.size()) return {false, fmt("size mismatch at trial %d", trial)};
      for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
  }

  // Degradation: no reliable neighbour anywhere. va ignores reliability by
  // definition and struct_agnostic never mixes, so neither is covered here.
  ParameterStore store;
  const GprParams params = GprParams::create(store, Skeleton::coco17(), 4, rng);
  for (std::size_t e = 0; e < params.edges().size(); ++e) {
    for (double& v : store[params.transform(e).weight].value.values()) v = u(rng);
    for (double& v : store[params.transform(e).bias].value.values()) v = u(rng);
  }
  testing::GraphData data = testing::random_graphs(3, 17, 4, rng, 1.0);
  std::fill(data.reliable.begin(), data.reliable.end(), 0);
  // Exact: compared bitwise with the self transform applied by the linear op.
  const auto self = testing::self_messages(data, params, store);
  int inexact = 0;
  for (GprVariant variant : {GprVariant::kFull, GprVariant::kVb, GprVariant::kVc}) {
    const auto out = testing::gpr_library(data, params, store, variant);
    for (std::size_t i = 0; i < out.size(); ++i) inexact += out[i] != self[i];
  }
  return {worst <= 1e-10 && inexact == 0,
          fmt("100 graphs x 5 variants, max abs diff %.2e (limit 1e-10); degradation: %d inexact outputs",
              worst, inexact)};
}

// 3. Sampler labels, per-kind counts and positive/negative balance.
Outcome sampler_check() {
  const RunConfig cfg;
  const GridSize grid = cfg.grid();
  const Skeleton skeleton = cfg.skeleton();
  const int n = cfg.guided_points;
  Rng rng = make_rng(77, 0);
  std::normal_distribution<double> shift(0.0, 3.0);
  std::uniform_real_distribution<double> noise(0.0, 0.3);
  long violations = 0, bad_counts = 0, bad_ratio = 0, points = 0;
  double min_ratio = 1e9, max_ratio = 0.0;
  for (int b = 0; b < 1000; ++b) {
    KeypointSet truth;
    truth.coords = random_pose(skeleton, grid, rng);
    truth.weights.assign(truth.coords.size(), 1.0);
    if (b % 4 == 3) truth.weights[static_cast<std::size_t>(b % 17)] = 0.0;
    // A noisy, partly misplaced prediction, like a half-trained stage 1.
    KeypointSet guess = truth;
    for (auto& p : guess.coords) p = {p.x + shift(rng), p.y + shift(rng)};
    Tensor heat = gaussian_targets(guess, cfg.sigma, grid);
    for (double& v : heat.values()) v += noise(rng);
    const SampleBatch batch = sample_batch(heat, truth, cfg.sigma, n, cfg.reliability(), rng);
    long pos = 0, neg = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      const auto& ks = batch.keypoints[k];
      if (!truth.visible(k)) {
        if (!ks.points.empty()) ++bad_counts;
        continue;
      }
      int kinds[3] = {0, 0, 0};
      for (const auto& p : ks.points) {
        ++points;
        const double dx = p.position.x - truth.coords[k].x, dy = p.position.y - truth.coords[k].y;
        const bool positive = std::sqrt(dx * dx + dy * dy) < 3.0 * cfg.sigma;
        const PointLabel want = positive ? PointLabel::kPositive : PointLabel::kNegative;
        if (p.label != want) ++violations;
        (positive ? pos : neg) += 1;
        if (p.kind != PointKind::kDecoded) ++kinds[static_cast<int>(p.kind)];
      }
      if (kinds[0] != n / 3 || kinds[1] != n / 3 || kinds[2] != n / 3) ++bad_counts;
    }
    const double ratio = static_cast<double>(pos) / static_cast<double>(std::max<long>(neg, 1));
    min_ratio = std::min(min_ratio, ratio);
    max_ratio = std::max(max_ratio, ratio);
    if (ratio < 0.5 || ratio > 2.0) ++bad_ratio;
  }
  return {violations == 0 && bad_counts == 0 && bad_ratio == 0,
          fmt("1000 batches, %ld points: %ld label violations, %ld keypoints with wrong kind counts, pos:neg "
              "in [%.3f, %.3f] (%ld outside [0.5, 2])",
              points, violations, bad_counts, min_ratio, max_ratio, bad_ratio)};
}

// 4. Quarter-offset decoding beats the plain argmax on sub-pixel targets.
Outcome decoder_check() {
  const GridSize grid{64, 48};
  Rng rng(4);
  std::uniform_real_distribution<double> ux(4.0, 59.0), uy(4.0, 43.0);
  double decoded = 0.0, argmax = 0.0;
  constexpr int kTargets = 1000;
  for (int i = 0; i < kTargets; ++i) {
    const Point2 t{ux(rng), uy(rng)};
    const Tensor channel = gaussian_target(t, 2.0, grid).channel;
    const Point2 d = decode_heatmap(channel).position;
    decoded += std::hypot(d.x - t.x, d.y - t.y);
    const auto& v = channel.values();
    const auto best = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    const double ax = static_cast<double>(best % 64), ay = static_cast<double>(best / 64);
    argmax += std::hypot(ax - t.x, ay - t.y);
  }
  decoded /= kTargets;
  argmax /= kTargets;
  return {decoded < 0.5 && decoded < argmax,
          fmt("mean error %.4f px with offset, %.4f px plain argmax (limit 0.5)", decoded, argmax)};
}

// 5. End-to-end training on the default config.
Outcome end_to_end() {
  const RunConfig cfg;
  const auto start = Clock::now();
  const Dataset train_set = train_dataset(cfg);
  const Dataset heldout = heldout_dataset(cfg);
  Model model(cfg);
  TrainOptions opts;
  opts.metrics_log = g_work / "criterion5_metrics.jsonl";
  opts.checkpoint = g_work / "criterion5.ckpt";
  opts.on_epoch = [](const EpochMetrics& m) { std::cerr << "  " << m.to_json().dump() << '\n'; };
  const TrainResult result = train(model, train_set, heldout, opts);
  const double elapsed = seconds_since(start);
  const EpochMetrics& last = result.epochs.back();
  const double ratio = last.stage2_error / last.stage1_error;
  return {ratio <= 0.8 && last.stage2_ap >= last.stage1_ap && elapsed < 900.0,
          fmt("%d epochs: stage-1 error %.3f px, stage-2 error %.3f px (ratio %.3f, limit 0.8), AP1 %.4f, "
              "AP2 %.4f, %.0f s (limit 900 s)",
              last.epoch + 1, last.stage1_error, last.stage2_error, ratio, last.stage1_ap, last.stage2_ap,
              elapsed)};
}

// Default config and seed with occlusion; five full training runs, about an
// hour on one core.
RunConfig ablation_config() {
  RunConfig cfg;
  cfg.occlusion_rate = 0.3;
  return cfg;
}

// 6. Variant ordering under occlusion. The table is printed either way.
Outcome ablation_check() {
  const RunConfig cfg = ablation_config();
  const auto start = Clock::now();
  const AblationResult result = run_ablation(cfg, [](const AblationRow& row) {
    std::cerr << "  " << to_string(row.variant) << ": AP2 " << row.report.stage2.ap << '\n';
  });
  std::cout << result.to_text();
  std::ofstream(g_work / "criterion6_ablation.json") << result.to_json().dump(2) << '\n';
  const double full = result.row(GprVariant::kFull).report.stage2.ap;
  const double agnostic = result.row(GprVariant::kStructAgnostic).report.stage2.ap;
  const double va = result.row(GprVariant::kVa).report.stage2.ap;
  return {result.ordering_holds(),
          fmt("occlusion 0.3, seed %llu, %d epochs: AP2 full %.4f, struct_agnostic %.4f, va %.4f (%.0f s)",
              static_cast<unsigned long long>(cfg.seed), cfg.epochs, full, agnostic, va, seconds_since(start))};
}

// 7. Same config and seed give identical logs; checkpoints round-trip to the byte.
Outcome determinism_check() {
  RunConfig cfg;
  cfg.train_samples = 48;
  cfg.heldout_samples = 16;
  cfg.epochs = 2;
  cfg.seed = 99;
  std::string logs[2], ckpts[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = g_work / ("criterion7_run" + std::to_string(run));
    fs::create_directories(dir);
    Model model(cfg);
    TrainOptions opts;
    opts.metrics_log = dir / "metrics.jsonl";
    opts.checkpoint = dir / "model.ckpt";
    train(model, train_dataset(cfg), heldout_dataset(cfg), opts);
    logs[run] = read_file(opts.metrics_log);
    ckpts[run] = read_file(opts.checkpoint);
  }
  const fs::path first = g_work / "criterion7_run0" / "model.ckpt";
  const fs::path again = g_work / "criterion7_resaved.ckpt";
  save_checkpoint(load_checkpoint(first), again);
  const std::string resaved = read_file(again);
  const bool logs_equal = !logs[0].empty() && logs[0] == logs[1];
  const bool round_trip = !ckpts[0].empty() && resaved == ckpts[0];
  return {logs_equal && round_trip && ckpts[0] == ckpts[1],
          fmt("metrics logs %s (%zu bytes), checkpoints across runs %s, save-load-save %s (%zu bytes)",
              logs_equal ? "identical" : "DIFFER", logs[0].size(), ckpts[0] == ckpts[1] ? "identical" : "DIFFER",
              round_trip ? "byte-identical" : "DIFFERS", ckpts[0].size())};
}

// 8. Default hyper-parameters and their effect on reliability.
Outcome defaults_check() {
  const RunConfig cfg;
  const ReliabilityConfig rel = cfg.reliability();
  const double sigma = cfg.sigma;
  GuidedPoint p;
  const Point2 truth{20.0, 20.0};
  auto train_reliable = [&](double dist) {
    p.position = {truth.x + dist, truth.y};
    return compute_reliability(p, Phase::kTrain, truth, sigma, rel);
  };
  auto test_reliable = [&](double heat) {
    p.heat = heat;
    return compute_reliability(p, Phase::kEval, std::nullopt, sigma, rel);
  };
  const bool values = cfg.regression_weight == 16.0 && cfg.delta_factor == 2.0 && cfg.xi == 0.85;
  const bool json = RunConfig::from_json(nlohmann::json::object()).to_json() == cfg.to_json();
  const bool effect = train_reliable(2.0 * sigma - 1e-9) && !train_reliable(2.0 * sigma) &&
                      test_reliable(0.8500001) && !test_reliable(0.85);
  return {values && json && effect,
          fmt("lambda %g, delta %g sigma, xi %g; empty config document %s; reliability thresholds %s",
              cfg.regression_weight, cfg.delta_factor, cfg.xi, json ? "keeps defaults" : "CHANGES defaults",
              effect ? "behave as configured" : "MISBEHAVE")};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

constexpr Criterion kCriteria[] = {
    {1, "gradient suite", gradient_suite},
    {2, "graph layer oracle", gpr_oracle_check},
    {3, "guided point sampler", sampler_check},
    {4, "heatmap decoding", decoder_check},
    {5, "end-to-end refinement", end_to_end},
    {6, "variant ablation", ablation_check},
    {7, "determinism and checkpoints", determinism_check},
    {8, "default hyper-parameters", defaults_check},
};

int usage() {
  std::cerr << "usage: gpcnn_acceptance [--only N] [--work DIR]\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  g_work = fs::temp_directory_path() / "gpcnn_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
      if (only < 1 || only > 8) return usage();
    } else if (arg == "--work" && i + 1 < argc) {
      g_work = argv[++i];
    } else {
      return usage();
    }
  }
  fs::create_directories(g_work);

  bool all = true;
  for (const auto& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << o.detail
              << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
