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

#ifndef GPCNN_GEOMETRY_HPP_
#define GPCNN_GEOMETRY_HPP_

#include <span>
#include <vector>

#include "gpcnn/numerics/tape.hpp"
#include "gpcnn/numerics/tensor.hpp"
#include "gpcnn/types.hpp"

namespace gpcnn {

// Grids are stored row-major as [H, W] (single channel) or [H, W, D]
// (channel-last). Point2{x, y} addresses column x, row y.

/// Ground-truth keypoints in heatmap pixel units with target weights
/// (1 = supervised, 0 = ignored).
struct KeypointSet {
  std::vector<Point2> coords;
  std::vector<double> weights;

  std::size_t size() const noexcept { return coords.size(); }
  bool visible(std::size_t k) const { return weights.at(k) > 0.0; }
  std::size_t visible_count() const noexcept;
};

/// Per-keypoint score grid [H, W, K] together with the Gaussian width used
/// to build its targets.
class Heatmap {
 public:
  Heatmap(Tensor scores, double sigma);

  const Tensor& scores() const noexcept { return scores_; }
  double sigma() const noexcept { return sigma_; }
  GridSize grid() const noexcept;
  int channels() const noexcept { return static_cast<int>(scores_.dim(2)); }
  /// Copy of channel k as [H, W].
  Tensor channel(int k) const;

 private:
  Tensor scores_;
  double sigma_;
};

/// Localization features [H, W, C] on the heatmap grid.
class FeatureMap {
 public:
  explicit FeatureMap(Tensor features);

  const Tensor& features() const noexcept { return features_; }
  GridSize grid() const noexcept;
  int channels() const noexcept { return static_cast<int>(features_.dim(2)); }

 private:
  Tensor features_;
};

inline constexpr double kGaussianTruncation = 1e-4;

struct GaussianTarget {
  Tensor channel;        // [H, W]
  bool outside = false;  // centre lies outside the grid; channel is all zero
};

/// exp(-|p - t|^2 / (2 sigma^2)) at every grid point, values below
/// kGaussianTruncation set to zero.
GaussianTarget gaussian_target(Point2 center, double sigma, GridSize grid);

/// Stacks one target per keypoint into [H, W, K].
Tensor gaussian_targets(const KeypointSet& keypoints, double sigma, GridSize grid);

/// Channel k of an [H, W, K] tensor as [H, W].
Tensor extract_channel(const Tensor& maps, int k);

struct DecodedPeak {
  Point2 position;
  double peak = 0.0;
  bool degenerate = false;
};

/// Argmax (first in row-major order), then a quarter-pixel shift per axis
/// toward the larger of the two axis neighbours. No shift at borders or when
/// the neighbours tie. A constant channel decodes to the grid centre with
/// `degenerate` set.
DecodedPeak decode_heatmap(const Tensor& channel);

struct BilinearSample {
  std::vector<double> values;
  bool clamped = false;
};

/// Four-neighbour bilinear interpolation of an [H, W] or [H, W, D] grid.
/// Positions outside [0, W-1] x [0, H-1] are clamped and flagged.
BilinearSample bilinear_sample(const Tensor& map, Point2 position);

/// Differentiable batch version: samples `map` [H, W, D] at every point and
/// returns [P, D]. Gradient flows to the map values only.
Var sample_points(const Var& map, std::span<const Point2> points);

/// Sorted, de-duplicated row-major pixel indices (y * W + x) read when
/// bilinearly sampling a [H, W, ...] grid at `points`.
std::vector<std::size_t> bilinear_support(GridSize grid, std::span<const Point2> points);

/// Heat responses are used as message weights; predictions are unbounded.
double clamp_heat(double h) noexcept;
Var clamp_heat(const Var& h);

}  // namespace gpcnn

#endif  // GPCNN_GEOMETRY_HPP_
