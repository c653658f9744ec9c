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

#ifndef GPCNN_PIPELINE_CONFIG_HPP_
#define GPCNN_PIPELINE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpcnn/gpr.hpp"
#include "gpcnn/sampling.hpp"
#include "gpcnn/types.hpp"

namespace gpcnn {

// How the stage-1 heatmap loss is scaled before it joins the stage-2 loss.
//   pixel_mean: stage1 + stage2, with stage1 the per-pixel mean squared error.
//   pixel_sum:  (H * W) * stage1 + stage2, i.e. squared error summed over the
//               heatmap. Keeps the shared trunk from being dominated by
//               stage 2 on small grids.
enum class Stage1Scale { kPixelMean, kPixelSum };

/// Everything needed to generate data, build, train and evaluate a model.
struct RunConfig {
  int num_keypoints = 17;
  int grid_width = 64;
  int grid_height = 48;
  int input_channels = 3;
  int channels = 32;
  double sigma = 2.0;
  int guided_points = 48;
  double regression_weight = 16.0;
  double delta_factor = 2.0;
  double xi = 0.85;
  GprVariant variant = GprVariant::kFull;
  // Empty selects the COCO skeleton for 17 keypoints and a chain otherwise.
  std::vector<Skeleton::Edge> skeleton_edges;
  std::uint64_t seed = 0;
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double occlusion_rate = 0.0;
  double ignore_rate = 0.05;
  int train_samples = 2000;
  int heldout_samples = 500;
  Stage1Scale stage1_scale = Stage1Scale::kPixelSum;
  double oks_kappa = 0.1;

  GridSize grid() const noexcept { return {grid_width, grid_height}; }
  Skeleton skeleton() const;
  ReliabilityConfig reliability() const noexcept { return {delta_factor, xi}; }
  double stage1_weight() const noexcept;

  /// Throws ErrorCode::kConfig naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& doc);

  /// FNV-1a of the canonical JSON dump, as 16 hex digits. The seed is part of
  /// the hash.
  std::string hash() const;
};

/// K=3 chain, 16x12 grid, C=8: small enough for exhaustive gradient checks.
RunConfig tiny_config();

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

/// Independent RNG stream for a purpose tag derived from the run seed.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kTrainData = 2;
inline constexpr std::uint64_t kHeldoutData = 3;
inline constexpr std::uint64_t kSampling = 4;
inline constexpr std::uint64_t kShuffle = 5;
}  // namespace streams

}  // namespace gpcnn

#endif  // GPCNN_PIPELINE_CONFIG_HPP_
