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

#ifndef GPCNN_EVAL_HPP_
#define GPCNN_EVAL_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpcnn/geometry.hpp"
#include "gpcnn/gpr.hpp"
#include "gpcnn/pipeline/infer.hpp"
#include "gpcnn/pipeline/synth.hpp"

namespace gpcnn {

inline constexpr double kDefaultOksKappa = 0.1;

/// Area of the bounding box of the supervised ground-truth keypoints.
double pose_area(const KeypointSet& gt);

/// Object keypoint similarity over the keypoints with gt weight > 0:
/// mean of exp(-d_k^2 / (2 area kappa_k^2)). Throws kUndefinedOks when no
/// keypoint is supervised or the area is not positive.
double oks(std::span<const Point2> pred, const KeypointSet& gt, double area,
           std::span<const double> kappa);
double oks(std::span<const Point2> pred, const KeypointSet& gt, double area,
           double kappa = kDefaultOksKappa);

/// 0.50, 0.55, ..., 0.95.
std::vector<double> oks_thresholds();

/// Mean over thresholds of the fraction of poses with OKS >= threshold.
double average_precision(std::span<const double> oks_values,
                         std::span<const double> thresholds);
double average_precision(std::span<const double> oks_values);

struct StageMetrics {
  double mean_error = 0.0;
  double pck = 0.0;
  double ap = 0.0;
  std::vector<double> keypoint_error;  // per keypoint, supervised only
};

struct EvalReport {
  int samples = 0;
  double pck_threshold = 0.0;  // pixels
  StageMetrics stage1;
  StageMetrics stage2;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Scores both stages of the same predictions against the dataset. The PCK
/// threshold is sigma pixels.
EvalReport evaluate_predictions(const Dataset& dataset, std::span<const Prediction> predictions,
                                double sigma, double kappa = kDefaultOksKappa);

EvalReport evaluate(Model& model, const Dataset& dataset);

struct AblationRow {
  GprVariant variant = GprVariant::kFull;
  EvalReport report;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // kAllVariants order

  const AblationRow& row(GprVariant variant) const;
  /// full reaches at least the stage-2 AP of struct_agnostic and of va.
  bool ordering_holds() const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Trains one model per variant from the same config and seed and evaluates
/// each on the same held-out set. `on_row` fires after every variant.
AblationResult run_ablation(const RunConfig& config,
                            const std::function<void(const AblationRow&)>& on_row = {});

}  // namespace gpcnn

#endif  // GPCNN_EVAL_HPP_
