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

#ifndef GPCNN_SAMPLING_HPP_
#define GPCNN_SAMPLING_HPP_

#include <optional>
#include <vector>

#include "gpcnn/geometry.hpp"
#include "gpcnn/numerics/tensor.hpp"
#include "gpcnn/types.hpp"

namespace gpcnn {

enum class PointKind { kNear, kFar, kTopResponse, kDecoded };
enum class PointLabel { kUnset, kPositive, kNegative };

const char* to_string(PointKind kind) noexcept;

/// Candidate location from which stage 2 reads features and regresses an
/// offset to its keypoint.
struct GuidedPoint {
  int keypoint = 0;
  Point2 position;
  double heat = 0.0;  // bilinear heat response, clamped to [0, 1]
  PointKind kind = PointKind::kNear;
  PointLabel label = PointLabel::kUnset;
  bool reliable = false;
};

// Radius of the positive region, in units of the target Gaussian sigma.
inline constexpr double kPositiveRadiusFactor = 3.0;

struct ReliabilityConfig {
  double delta_factor = 2.0;  // train: |s - t| < delta_factor * sigma
  double xi = 0.85;           // test:  h > xi
};

/// |s - t| < 3 sigma.
bool is_positive(Point2 position, Point2 truth, double sigma) noexcept;

struct KeypointSamples {
  int keypoint = 0;
  std::vector<GuidedPoint> points;
  int positives = 0;
  int negatives = 0;
  bool with_replacement = false;  // grid had fewer than `count` cells
};

/// Draws count/3 points of each kind for one keypoint: uniform in the open
/// 3-sigma disk around `truth`, uniform over the rest of the grid, and
/// without replacement from the `count` highest-scoring cells of
/// `heat_channel` [H, W] with +-0.5 cell jitter. Each point gets its
/// bilinear heat and distance label.
KeypointSamples sample_guided_points(const Tensor& heat_channel, int keypoint, Point2 truth,
                                     double sigma, int count, Rng& rng);

/// Train phase: |s - t| < delta (requires `truth`). Test phase: h > xi.
bool compute_reliability(const GuidedPoint& point, Phase phase, std::optional<Point2> truth,
                         double sigma, const ReliabilityConfig& config = {});

/// N guided points for every supervised keypoint of one sample. Keypoints
/// with zero target weight get an empty list.
struct SampleBatch {
  int count = 0;
  std::vector<KeypointSamples> keypoints;

  bool has(int k) const { return !keypoints.at(static_cast<std::size_t>(k)).points.empty(); }
};

/// Samples every visible keypoint of `truth` from `heatmaps` [H, W, K] and
/// assigns train-phase reliability.
SampleBatch sample_batch(const Tensor& heatmaps, const KeypointSet& truth, double sigma, int count,
                         const ReliabilityConfig& reliability, Rng& rng);

/// Uniformly permutes each keypoint's list in place. Pose graph i is later
/// assembled from the i-th entry of every list.
void shuffle_guided_points(SampleBatch& batch, Rng& rng);

struct TestPoint {
  GuidedPoint point;
  bool degenerate = false;
};

/// Test-time guided point: the decoded peak with its clamped score.
TestPoint select_test_point(const Tensor& heat_channel, int keypoint);

}  // namespace gpcnn

#endif  // GPCNN_SAMPLING_HPP_
