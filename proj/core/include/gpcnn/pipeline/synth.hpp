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

#ifndef GPCNN_PIPELINE_SYNTH_HPP_
#define GPCNN_PIPELINE_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gpcnn/geometry.hpp"
#include "gpcnn/gpr.hpp"
#include "gpcnn/numerics/tensor.hpp"
#include "gpcnn/pipeline/config.hpp"

namespace gpcnn {

/// One rendered pose. Input channels:
///   0: distance field to the skeleton segments, 1 on a bone, 0 beyond 2 px
///   1, 2: per-joint blobs whose (cos, sin) amplitude pair encodes the joint
///         identity as an angle, plus uniform noise in [-0.05, 0.05]
struct SynthSample {
  Tensor input;                    // [H, W, 3]
  KeypointSet keypoints;           // heatmap pixel units
  std::vector<std::uint8_t> occluded;  // blob erased, weight kept
  std::uint64_t seed = 0;
};

struct Dataset {
  GridSize grid;
  int num_keypoints = 0;
  std::vector<SynthSample> samples;
};

inline constexpr double kBlobSigma = 1.5;
inline constexpr double kSynthNoise = 0.05;

/// Identity angle of keypoint k; neighbouring indices get distant angles.
double identity_angle(int k, int num_keypoints) noexcept;

/// Random articulated pose over `skeleton`, inside [1, W-2] x [1, H-2].
std::vector<Point2> random_pose(const Skeleton& skeleton, GridSize grid, Rng& rng);

SynthSample synth_sample(const Skeleton& skeleton, GridSize grid, double occlusion_rate,
                         double ignore_rate, std::uint64_t seed);

/// Sample i is generated from a seed drawn from the stream seeded by `seed`,
/// so the dataset is reproducible and any sample can be regenerated alone.
Dataset synth_generate(int count, const Skeleton& skeleton, GridSize grid, double occlusion_rate,
                       std::uint64_t seed, double ignore_rate = 0.05);

/// Train and held-out sets for a run config.
Dataset train_dataset(const RunConfig& config);
Dataset heldout_dataset(const RunConfig& config);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace gpcnn

#endif  // GPCNN_PIPELINE_SYNTH_HPP_
