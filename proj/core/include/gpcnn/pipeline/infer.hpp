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

#ifndef GPCNN_PIPELINE_INFER_HPP_
#define GPCNN_PIPELINE_INFER_HPP_

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpcnn/pipeline/model.hpp"

namespace gpcnn {

struct KeypointPrediction {
  Point2 stage1;        // decoded heatmap peak
  Point2 refined;       // stage1 + regressed offset, clamped to the grid
  double score = 0.0;   // positive-class probability
  double heat = 0.0;    // clamped heat at the guided point
  bool reliable = false;
  bool degenerate = false;  // constant heatmap channel
  bool clamped = false;     // refined coordinate hit the grid border
};

struct Prediction {
  std::vector<KeypointPrediction> keypoints;

  nlohmann::json to_json() const;
};

/// Test-time pass: one guided point per keypoint at the decoded peak, one
/// pose graph per input, eval-mode batch norm.
Prediction infer(Model& model, const Tensor& input);

/// Same as calling infer on each input; graphs are processed together.
std::vector<Prediction> infer_batch(Model& model, std::span<const Tensor* const> inputs);

}  // namespace gpcnn

#endif  // GPCNN_PIPELINE_INFER_HPP_
