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

#include "gpcnn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>

#include "gpcnn/error.hpp"
#include "gpcnn/pipeline/train.hpp"

namespace gpcnn {
namespace {

constexpr std::size_t kEvalChunk = 64;

nlohmann::json stage_json(const StageMetrics& s) {
  return {{"mean_error", s.mean_error}, {"pck", s.pck}, {"ap", s.ap}, {"keypoint_error", s.keypoint_error}};
}

}  // namespace

double pose_area(const KeypointSet& gt) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  bool any = false;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (!gt.visible(k)) continue;
    any = true;
    x0 = std::min(x0, gt.coords[k].x);
    x1 = std::max(x1, gt.coords[k].x);
    y0 = std::min(y0, gt.coords[k].y);
    y1 = std::max(y1, gt.coords[k].y);
  }
  return any ? (x1 - x0) * (y1 - y0) : 0.0;
}

double oks(std::span<const Point2> pred, const KeypointSet& gt, double area,
           std::span<const double> kappa) {
  GPCNN_REQUIRE(pred.size() == gt.size() && kappa.size() == gt.size(), ErrorCode::kDimension,
          "oks: prediction, ground truth and kappa sizes differ");
  GPCNN_REQUIRE(area > 0.0, ErrorCode::kUndefinedOks, "oks: pose area must be positive");
  double total = 0.0;
  int visible = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (!gt.visible(k)) continue;
    const double d2 = squared_distance(pred[k], gt.coords[k]);
    total += std::exp(-d2 / (2.0 * area * kappa[k] * kappa[k]));
    ++visible;
  }
  GPCNN_REQUIRE(visible > 0, ErrorCode::kUndefinedOks, "oks: no supervised keypoints");
  return total / visible;
}

double oks(std::span<const Point2> pred, const KeypointSet& gt, double area, double kappa) {
  const std::vector<double> k(gt.size(), kappa);
  return oks(pred, gt, area, k);
}

std::vector<double> oks_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50.0 + 5.0 * i) / 100.0);
  return t;
}

double average_precision(std::span<const double> oks_values, std::span<const double> thresholds) {
  GPCNN_REQUIRE(!oks_values.empty(), ErrorCode::kEmptyInput, "average_precision: no OKS values");
  GPCNN_REQUIRE(!thresholds.empty(), ErrorCode::kEmptyInput, "average_precision: no thresholds");
  double ap = 0.0;
  for (double t : thresholds) {
    const auto hits = std::count_if(oks_values.begin(), oks_values.end(), [t](double o) { return o >= t; });
    ap += static_cast<double>(hits) / static_cast<double>(oks_values.size());
  }
  return ap / static_cast<double>(thresholds.size());
}

double average_precision(std::span<const double> oks_values) {
  const auto t = oks_thresholds();
  return average_precision(oks_values, t);
}

EvalReport evaluate_predictions(const Dataset& dataset, std::span<const Prediction> predictions,
                                double sigma, double kappa) {
  GPCNN_REQUIRE(!dataset.samples.empty(), ErrorCode::kEmptyInput, "evaluate: empty dataset");
  GPCNN_REQUIRE(predictions.size() == dataset.samples.size(), ErrorCode::kDimension,
          "evaluate: " + std::to_string(predictions.size()) + " predictions for " +
              std::to_string(dataset.samples.size()) + " samples");
  const auto k_count = static_cast<std::size_t>(dataset.num_keypoints);
  EvalReport r;
  r.samples = static_cast<int>(dataset.samples.size());
  r.pck_threshold = sigma;

  struct Acc {
    double error = 0.0;
    double hits = 0.0;
    std::vector<double> per_k;
    std::vector<double> oks;
  };
  Acc acc[2];
  for (auto& a : acc) a.per_k.assign(k_count, 0.0);
  std::vector<double> per_k_count(k_count, 0.0);
  double total = 0.0;

  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const KeypointSet& gt = dataset.samples[i].keypoints;
    GPCNN_REQUIRE(predictions[i].keypoints.size() == k_count && gt.size() == k_count, ErrorCode::kDimension,
            "evaluate: keypoint count mismatch in sample " + std::to_string(i));
    std::vector<Point2> pts[2];
    for (const auto& kp : predictions[i].keypoints) {
      pts[0].push_back(kp.stage1);
      pts[1].push_back(kp.refined);
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      if (!gt.visible(k)) continue;
      total += 1.0;
      per_k_count[k] += 1.0;
      for (int s = 0; s < 2; ++s) {
        const double e = distance(pts[s][k], gt.coords[k]);
        acc[s].error += e;
        acc[s].per_k[k] += e;
        if (e <= r.pck_threshold) acc[s].hits += 1.0;
      }
    }
    const double area = pose_area(gt);
    if (gt.visible_count() == 0 || area <= 0.0) continue;
    for (int s = 0; s < 2; ++s) acc[s].oks.push_back(oks(pts[s], gt, area, kappa));
  }
  GPCNN_REQUIRE(total > 0.0, ErrorCode::kEmptyInput, "evaluate: no supervised keypoints");
  StageMetrics* out[2] = {&r.stage1, &r.stage2};
  for (int s = 0; s < 2; ++s) {
    out[s]->mean_error = acc[s].error / total;
    out[s]->pck = acc[s].hits / total;
    out[s]->ap = acc[s].oks.empty() ? 0.0 : average_precision(acc[s].oks);
    out[s]->keypoint_error.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      out[s]->keypoint_error[k] = per_k_count[k] > 0.0 ? acc[s].per_k[k] / per_k_count[k] : 0.0;
    }
  }
  return r;
}

EvalReport evaluate(Model& model, const Dataset& dataset) {
  GPCNN_REQUIRE(dataset.grid == model.config().grid() && dataset.num_keypoints == model.config().num_keypoints,
          ErrorCode::kConfig, "evaluate: dataset does not match the model config");
  std::vector<Prediction> predictions;
  predictions.reserve(dataset.samples.size());
  for (std::size_t start = 0; start < dataset.samples.size(); start += kEvalChunk) {
    std::vector<const Tensor*> inputs;
    for (std::size_t i = start; i < std::min(dataset.samples.size(), start + kEvalChunk); ++i) {
      inputs.push_back(&dataset.samples[i].input);
    }
    auto chunk = infer_batch(model, inputs);
    std::move(chunk.begin(), chunk.end(), std::back_inserter(predictions));
  }
  return evaluate_predictions(dataset, predictions, model.config().sigma, model.config().oks_kappa);
}

nlohmann::json EvalReport::to_json() const {
  return {{"samples", samples},
          {"pck_threshold", pck_threshold},
          {"stage1", stage_json(stage1)},
          {"stage2", stage_json(stage2)}};
}

std::string EvalReport::to_text() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %12s %10s %8s\n", "stage", "mean_error", "pck", "ap");
  out += line;
  const StageMetrics* rows[2] = {&stage1, &stage2};
  const char* names[2] = {"stage1", "stage2"};
  for (int s = 0; s < 2; ++s) {
    std::snprintf(line, sizeof(line), "%-8s %12.4f %10.4f %8.4f\n", names[s], rows[s]->mean_error,
                  rows[s]->pck, rows[s]->ap);
    out += line;
  }
  out += "\n";
  std::snprintf(line, sizeof(line), "%-8s %12s %12s\n", "keypoint", "stage1_err", "stage2_err");
  out += line;
  for (std::size_t k = 0; k < stage1.keypoint_error.size(); ++k) {
    std::snprintf(line, sizeof(line), "%-8zu %12.4f %12.4f\n", k, stage1.keypoint_error[k],
                  stage2.keypoint_error[k]);
    out += line;
  }
  return out;
}

const AblationRow& AblationResult::row(GprVariant variant) const {
  for (const auto& r : rows) {
    if (r.variant == variant) return r;
  }
  fail(ErrorCode::kIndexOutOfRange, "ablation has no row for " + std::string(to_string(variant)));
}

bool AblationResult::ordering_holds() const {
  const double full = row(GprVariant::kFull).report.stage2.ap;
  return full >= row(GprVariant::kStructAgnostic).report.stage2.ap &&
         full >= row(GprVariant::kVa).report.stage2.ap;
}

nlohmann::json AblationResult::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"variant", std::string(to_string(r.variant))},
                   {"stage1_error", r.report.stage1.mean_error},
                   {"stage2_error", r.report.stage2.mean_error},
                   {"stage1_ap", r.report.stage1.ap},
                   {"stage2_ap", r.report.stage2.ap}});
  }
  return {{"rows", out}, {"ordering_holds", ordering_holds()}};
}

std::string AblationResult::to_text() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %12s %12s %10s %10s\n", "variant", "stage1_err",
                "stage2_err", "stage1_ap", "stage2_ap");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-16s %12.4f %12.4f %10.4f %10.4f\n",
                  std::string(to_string(r.variant)).c_str(), r.report.stage1.mean_error,
                  r.report.stage2.mean_error, r.report.stage1.ap, r.report.stage2.ap);
    out += line;
  }
  return out;
}

AblationResult run_ablation(const RunConfig& config,
                            const std::function<void(const AblationRow&)>& on_row) {
  const Dataset train_set = train_dataset(config);
  const Dataset heldout = heldout_dataset(config);
  AblationResult result;
  for (GprVariant v : kAllVariants) {
    RunConfig cfg = config;
    cfg.variant = v;
    Model model(cfg);
    TrainOptions opts;
    opts.evaluate_heldout = false;
    train(model, train_set, heldout, opts);
    result.rows.push_back({v, evaluate(model, heldout)});
    if (on_row) on_row(result.rows.back());
  }
  return result;
}

}  // namespace gpcnn
