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

#ifndef GPCNN_LOSSES_HPP_
#define GPCNN_LOSSES_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpcnn/numerics/tape.hpp"
#include "gpcnn/sampling.hpp"
#include "gpcnn/types.hpp"

namespace gpcnn {

inline constexpr double kDefaultRegressionWeight = 16.0;

struct ScalarLoss {
  Var value;           // [1]
  bool flag = false;   // degenerate input; value is an exact zero
};

/// Mean squared error over the pixels of each channel of predicted [H, W, K]
/// against target [H, W, K], weighted by gamma and averaged over the
/// supervised keypoints. Flags when every gamma is zero.
ScalarLoss stage1_loss(const Var& predicted, const Tensor& target, std::span<const double> gamma);

/// exp(-|s - t|^2 / (2 sigma^2)).
double positive_weight(Point2 position, Point2 truth, double sigma) noexcept;

struct KeypointLoss {
  Var value;
  int positives = 0;
  int negatives = 0;
  bool flag = false;  // an empty set contributed zero
};

/// Positive/negative split of one keypoint's points. Uses each point's label
/// when set, else the distance rule.
std::vector<std::uint8_t> positive_mask(std::span<const GuidedPoint> points, Point2 truth,
                                        double sigma);

/// Two-class classification loss over logits [P, 2] (class 1 = positive):
/// half the alpha-weighted mean cross-entropy of the positives plus half the
/// mean cross-entropy of the negatives.
KeypointLoss cls_loss(const Var& logits, std::span<const GuidedPoint> points, Point2 truth,
                      double sigma);

/// Mean L1 distance between offsets [P, 2] and (t - s) over the positives.
KeypointLoss reg_loss(const Var& offsets, std::span<const GuidedPoint> points, Point2 truth,
                      double sigma);

/// sum_k gamma_k (cls_k + lambda reg_k) / sum_k gamma_k. Terms whose gamma is
/// zero may be invalid Vars. Flags when sum gamma is zero.
ScalarLoss stage2_loss(std::span<const Var> cls, std::span<const Var> reg,
                       std::span<const double> gamma, double lambda = kDefaultRegressionWeight);

/// stage1 + stage2.
Var total_loss(const Var& stage1, const Var& stage2);

struct LossReport {
  double stage1 = 0.0;
  double stage1_weight = 1.0;
  double stage2 = 0.0;
  double total = 0.0;  // stage1_weight * stage1 + stage2
  std::vector<double> cls;
  std::vector<double> reg;
  std::vector<int> positives;
  std::vector<int> negatives;

  nlohmann::json to_json() const;
  /// One compact JSON line, no trailing newline.
  std::string to_json_line() const { return to_json().dump(); }
};

}  // namespace gpcnn

#endif  // GPCNN_LOSSES_HPP_
