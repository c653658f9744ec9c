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

#include "gpcnn/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "gpcnn/error.hpp"
#include "gpcnn/eval.hpp"
#include "gpcnn/numerics/adam.hpp"
#include "gpcnn/numerics/ops.hpp"
#include "gpcnn/pipeline/checkpoint.hpp"

namespace gpcnn {
namespace {

struct Block {
  std::size_t sample;
  std::size_t keypoint;
  std::size_t first_row;
};

}  // namespace

GuideSource random_guides(const Model& model, std::span<const SynthSample* const> samples,
                          Rng& rng) {
  const RunConfig cfg = model.config();
  return [cfg, samples, &rng](std::size_t index, const Tensor& heatmaps) {
    SampleBatch batch = sample_batch(heatmaps, samples[index]->keypoints, cfg.sigma,
                                     cfg.guided_points, cfg.reliability(), rng);
    if (cfg.variant != GprVariant::kVc) shuffle_guided_points(batch, rng);
    return batch;
  };
}

BatchLoss batch_loss(Tape& tape, Model& model, std::span<const SynthSample* const> samples,
                     const GuideSource& guides, bool update_running) {
  GPCNN_REQUIRE(!samples.empty(), ErrorCode::kEmptyInput, "batch_loss: empty batch");
  const RunConfig& cfg = model.config();
  const auto b_count = samples.size();
  const auto n = static_cast<std::size_t>(cfg.guided_points);
  const auto k_count = static_cast<std::size_t>(cfg.num_keypoints);
  const auto c = static_cast<std::size_t>(cfg.channels);
  const GridSize grid = cfg.grid();
  const Point2 centre{(grid.width - 1) / 2.0, (grid.height - 1) / 2.0};

  std::vector<Var> stage1_terms, feature_parts, heat_parts;
  std::vector<SampleBatch> batches;
  std::vector<std::uint8_t> reliable, active;
  std::vector<std::size_t> columns(n * k_count);
  for (std::size_t r = 0; r < columns.size(); ++r) columns[r] = r % k_count;

  BatchLoss out;
  for (std::size_t b = 0; b < b_count; ++b) {
    const SynthSample& s = *samples[b];
    GPCNN_REQUIRE(s.keypoints.size() == k_count, ErrorCode::kConfig,
            "batch_loss: sample has " + std::to_string(s.keypoints.size()) + " keypoints, model " +
                std::to_string(k_count));
    const TrunkOutput s1 = forward_trunk(tape, model, s.input);
    const ScalarLoss l1 = stage1_loss(s1.heatmaps, gaussian_targets(s.keypoints, cfg.sigma, grid),
                                      s.keypoints.weights);
    stage1_terms.push_back(l1.value);

    SampleBatch batch = guides(b, s1.heatmaps.value());
    GPCNN_REQUIRE(batch.keypoints.size() == k_count, ErrorCode::kDimension,
            "batch_loss: guide source returned the wrong keypoint count");
    // Graph i of this sample takes the i-th point of every keypoint list.
    std::vector<Point2> positions(n * k_count, centre);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto& pts = batch.keypoints[k].points;
        const bool has = !pts.empty();
        GPCNN_REQUIRE(!has || pts.size() == n, ErrorCode::kDimension,
                "batch_loss: keypoint " + std::to_string(k) + " has " + std::to_string(pts.size()) +
                    " guided points, expected " + std::to_string(n));
        if (has) positions[i * k_count + k] = pts[i].position;
        reliable.push_back(has && pts[i].reliable);
        active.push_back(has);
      }
    }
    const Var features = localization_at(tape, model, s1.trunk, bilinear_support(grid, positions));
    feature_parts.push_back(reshape(sample_points(features, positions), Shape{n, k_count, c}));
    heat_parts.push_back(reshape(
        clamp_heat(pick_columns(sample_points(s1.heatmaps, positions), columns)), Shape{n, k_count}));
    batches.push_back(std::move(batch));
  }

  const std::vector<double> mean_coeff(b_count, 1.0 / static_cast<double>(b_count));
  out.stage1 = linear_combination(stage1_terms, mean_coeff);

  GraphBatch graphs{static_cast<int>(b_count * n), concat_rows(feature_parts), concat_rows(heat_parts),
                    std::move(reliable), std::move(active)};
  const Var refined = reshape(gpr_forward(graphs, model.gpr(), model.store(), model.variant()),
                              Shape{b_count * n * k_count, c});

  // Rows of supervised nodes, grouped into contiguous (sample, keypoint) blocks.
  std::vector<std::size_t> rows;
  std::vector<Block> blocks;
  for (std::size_t b = 0; b < b_count; ++b) {
    for (std::size_t k = 0; k < k_count; ++k) {
      if (batches[b].keypoints[k].points.empty()) continue;
      blocks.push_back({b, k, rows.size()});
      for (std::size_t i = 0; i < n; ++i) rows.push_back(((b * n) + i) * k_count + k);
    }
  }

  out.report.stage1_weight = cfg.stage1_weight();
  out.report.cls.assign(k_count, 0.0);
  out.report.reg.assign(k_count, 0.0);
  out.report.positives.assign(k_count, 0);
  out.report.negatives.assign(k_count, 0);
  if (blocks.empty()) {
    out.stage2 = tape.constant(Tensor(Shape{1}, 0.0));
  } else {
    const HeadOutput head = head_forward(gather_rows(refined, rows), model.gpr(), model.store(),
                                         Phase::kTrain, update_running);
    std::vector<std::vector<Var>> cls(b_count, std::vector<Var>(k_count)),
        reg(b_count, std::vector<Var>(k_count));
    std::vector<double> count(k_count, 0.0);
    for (const Block& blk : blocks) {
      const auto& pts = batches[blk.sample].keypoints[blk.keypoint].points;
      const Point2 truth = samples[blk.sample]->keypoints.coords[blk.keypoint];
      const KeypointLoss lc = cls_loss(slice_rows(head.logits, blk.first_row, n), pts, truth, cfg.sigma);
      const KeypointLoss lr = reg_loss(slice_rows(head.offsets, blk.first_row, n), pts, truth, cfg.sigma);
      cls[blk.sample][blk.keypoint] = lc.value;
      reg[blk.sample][blk.keypoint] = lr.value;
      out.report.cls[blk.keypoint] += lc.value.value().item();
      out.report.reg[blk.keypoint] += lr.value.value().item();
      out.report.positives[blk.keypoint] += lc.positives;
      out.report.negatives[blk.keypoint] += lc.negatives;
      count[blk.keypoint] += 1.0;
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      if (count[k] > 0.0) {
        out.report.cls[k] /= count[k];
        out.report.reg[k] /= count[k];
      }
    }
    std::vector<Var> stage2_terms;
    for (std::size_t b = 0; b < b_count; ++b) {
      // Keypoints without guided points carry no supervision in this sample.
      std::vector<double> gamma(k_count, 0.0);
      for (std::size_t k = 0; k < k_count; ++k) {
        if (cls[b][k].valid()) gamma[k] = samples[b]->keypoints.weights[k];
      }
      const bool any = std::any_of(gamma.begin(), gamma.end(), [](double g) { return g > 0.0; });
      stage2_terms.push_back(any ? stage2_loss(cls[b], reg[b], gamma, cfg.regression_weight).value
                                 : tape.constant(Tensor(Shape{1}, 0.0)));
    }
    out.stage2 = linear_combination(stage2_terms, mean_coeff);
  }

  out.total = total_loss(scale(out.stage1, cfg.stage1_weight()), out.stage2);
  out.report.stage1 = out.stage1.value().item();
  out.report.stage2 = out.stage2.value().item();
  out.report.total = out.total.value().item();
  return out;
}

nlohmann::json EpochMetrics::to_json() const {
  return {{"epoch", epoch},
          {"loss", loss},
          {"stage1_loss", stage1_loss},
          {"stage2_loss", stage2_loss},
          {"stage1_error", stage1_error},
          {"stage2_error", stage2_error},
          {"stage1_ap", stage1_ap},
          {"stage2_ap", stage2_ap}};
}

TrainResult train(Model& model, const Dataset& train_set, const Dataset& heldout,
                  const TrainOptions& options) {
  const RunConfig& cfg = model.config();
  cfg.validate();
  GPCNN_REQUIRE(train_set.grid == cfg.grid() && train_set.num_keypoints == cfg.num_keypoints,
          ErrorCode::kConfig, "train: dataset grid/keypoints do not match the config");
  GPCNN_REQUIRE(!train_set.samples.empty(), ErrorCode::kEmptyInput, "train: empty training set");
  if (options.evaluate_heldout) {
    GPCNN_REQUIRE(heldout.grid == cfg.grid() && heldout.num_keypoints == cfg.num_keypoints,
            ErrorCode::kConfig, "train: held-out grid/keypoints do not match the config");
  }

  std::ofstream log;
  if (!options.metrics_log.empty()) {
    log.open(options.metrics_log, std::ios::trunc);
    GPCNN_REQUIRE(log.good(), ErrorCode::kIo, "cannot open metrics log " + options.metrics_log.string());
  }

  const AdamConfig adam{cfg.learning_rate};
  Rng order_rng = make_rng(cfg.seed, streams::kShuffle);
  Rng sample_rng = make_rng(cfg.seed, streams::kSampling);
  const std::size_t total = train_set.samples.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> order(total);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = total; i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(order_rng)]);
    }
    EpochMetrics m;
    m.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < total; start += bs) {
      if (options.max_batches >= 0 && batches >= static_cast<std::size_t>(options.max_batches)) break;
      std::vector<const SynthSample*> samples;
      for (std::size_t i = start; i < std::min(total, start + bs); ++i) {
        samples.push_back(&train_set.samples[order[i]]);
      }
      model.store().zero_grad();
      Tape tape;
      const BatchLoss bl = batch_loss(tape, model, samples, random_guides(model, samples, sample_rng));
      GPCNN_REQUIRE(std::isfinite(bl.report.total), ErrorCode::kNonFinite,
              "loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                  std::to_string(batches));
      tape.backward(bl.total);
      adam_step(model.store(), adam);
      m.loss += bl.report.total;
      m.stage1_loss += bl.report.stage1;
      m.stage2_loss += bl.report.stage2;
      result.batch_losses.push_back(bl.report.total);
      ++batches;
    }
    if (batches > 0) {
      m.loss /= static_cast<double>(batches);
      m.stage1_loss /= static_cast<double>(batches);
      m.stage2_loss /= static_cast<double>(batches);
    }
    if (options.evaluate_heldout) {
      const EvalReport r = evaluate(model, heldout);
      m.stage1_error = r.stage1.mean_error;
      m.stage2_error = r.stage2.mean_error;
      m.stage1_ap = r.stage1.ap;
      m.stage2_ap = r.stage2.ap;
    }
    if (log.is_open()) {
      log << m.to_json().dump() << '\n';
      log.flush();
    }
    if (!options.checkpoint.empty()) save_checkpoint(model, options.checkpoint);
    if (options.on_epoch) options.on_epoch(m);
    result.epochs.push_back(m);
  }
  return result;
}

GradCheckResult check_model_gradients(const RunConfig& config, std::uint64_t seed,
                                      const GradCheckOptions& options, int batch) {
  RunConfig cfg = config;
  cfg.seed = seed;
  Model model(cfg);
  const Dataset data = synth_generate(batch, cfg.skeleton(), cfg.grid(), cfg.occlusion_rate,
                                      make_rng(seed, streams::kTrainData)(), 0.0);
  std::vector<const SynthSample*> samples;
  for (const auto& s : data.samples) samples.push_back(&s);

  Rng rng = make_rng(seed, streams::kSampling);
  const GuideSource draw = random_guides(model, samples, rng);
  std::vector<SampleBatch> fixed;
  const GuideSource guides = [&](std::size_t index, const Tensor& heatmaps) {
    if (fixed.size() <= index) fixed.push_back(draw(index, heatmaps));
    return fixed[index];
  };
  const LossFragment fragment = [&](Tape& tape) {
    return batch_loss(tape, model, samples, guides, false).total;
  };
  GradCheckOptions opts = options;
  opts.seed = seed;
  return grad_check(model.store(), fragment, opts);
}

}  // namespace gpcnn
