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

#ifndef GPCNN_GPR_HPP_
#define GPCNN_GPR_HPP_

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "gpcnn/geometry.hpp"
#include "gpcnn/numerics/tape.hpp"
#include "gpcnn/sampling.hpp"
#include "gpcnn/types.hpp"

namespace gpcnn {

/// Undirected keypoint adjacency. neighborhood(k) is {k} followed by the
/// adjacent keypoints in ascending order.
class Skeleton {
 public:
  using Edge = std::pair<int, int>;

  /// Throws ErrorCode::kConfig on self-edges, out-of-range indices or a
  /// disconnected graph.
  Skeleton(int num_keypoints, std::vector<Edge> edges);

  /// The 17-keypoint COCO person skeleton (0-based).
  static Skeleton coco17();
  static Skeleton chain(int num_keypoints);

  int num_keypoints() const noexcept { return num_keypoints_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<int>& neighborhood(int k) const { return neighborhoods_.at(static_cast<std::size_t>(k)); }

 private:
  int num_keypoints_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighborhoods_;
};

/// Message from `source` into `target`; source == target is the self term.
struct MessageEdge {
  int source = 0;
  int target = 0;
};

enum class GprVariant { kFull, kStructAgnostic, kVa, kVb, kVc };

inline constexpr std::array<GprVariant, 5> kAllVariants = {
    GprVariant::kFull, GprVariant::kStructAgnostic, GprVariant::kVa, GprVariant::kVb,
    GprVariant::kVc};

std::string_view to_string(GprVariant variant) noexcept;
/// Accepts "full", "struct_agnostic", "va", "vb", "vc".
GprVariant parse_variant(std::string_view name);

struct LinearIndex {
  std::size_t weight = 0;  // [in, out]
  std::size_t bias = 0;    // [out]
};

struct BatchNormIndex {
  std::size_t gamma = 0;
  std::size_t beta = 0;
  std::size_t running_mean = 0;
  std::size_t running_var = 0;
};

/// Indices of the stage-2 parameters inside a ParameterStore: one affine
/// transform per message edge plus the refinement head
/// (FC-BN-ReLU, FC-BN-ReLU, then 2-way classification and 2-D regression).
class GprParams {
 public:
  /// Registers all stage-2 parameters. Transforms start at identity plus
  /// uniform(-0.05, 0.05) noise with zero bias.
  static GprParams create(ParameterStore& store, const Skeleton& skeleton, int channels, Rng& rng);

  const Skeleton& skeleton() const noexcept { return skeleton_; }
  int channels() const noexcept { return channels_; }
  const std::vector<MessageEdge>& edges() const noexcept { return edges_; }
  const LinearIndex& transform(std::size_t edge) const { return transforms_.at(edge); }
  /// Index into edges() of the self transform of keypoint k.
  std::size_t self_edge(int k) const { return self_edges_.at(static_cast<std::size_t>(k)); }

  LinearIndex fc1, fc2, cls, reg;
  BatchNormIndex bn1, bn2;

 private:
  GprParams(Skeleton skeleton, int channels) : skeleton_(std::move(skeleton)), channels_(channels) {}

  Skeleton skeleton_;
  int channels_;
  std::vector<MessageEdge> edges_;
  std::vector<LinearIndex> transforms_;
  std::vector<std::size_t> self_edges_;
};

/// One guided point per keypoint plus its guided feature.
struct PoseGraph {
  std::vector<GuidedPoint> nodes;
  Tensor features;                    // [K, C]
  std::vector<std::uint8_t> active;   // 0 for keypoints without supervision
};

/// Graph i takes the i-th guided point of every keypoint list. Keypoints with
/// no samples become inactive placeholder nodes at the grid centre.
PoseGraph build_pose_graph(int index, const SampleBatch& batch, const Tensor& features,
                           const Skeleton& skeleton);

/// G pose graphs with K nodes each, laid out graph-major.
struct GraphBatch {
  int graphs = 0;
  Var features;                        // [G, K, C]
  Var heat;                            // [G, K], already clamped to [0, 1]
  std::vector<std::uint8_t> reliable;  // G*K
  std::vector<std::uint8_t> active;    // G*K; inactive nodes send no messages
};

/// Message weight of a non-self source node under `variant`.
double message_weight(GprVariant variant, double heat, bool reliable, bool active) noexcept;

/// Weighted, reliability-gated graph convolution. For every node k:
///   g_k = sum_{j in N(k)} w_j T_{jk}(f_j) / sum_{j in N(k)} w_j,
/// with w_k = 1 and w_j = message_weight(...) for j != k. The struct-agnostic
/// variant keeps only the self term. Returns [G, K, C].
Var gpr_forward(const GraphBatch& graphs, const GprParams& params, ParameterStore& store,
                GprVariant variant);

struct HeadOutput {
  Var logits;   // [R, 2]
  Var offsets;  // [R, 2], heatmap pixels
};

/// Refinement head over rows of refined features [R, C].
HeadOutput head_forward(const Var& refined, const GprParams& params, ParameterStore& store,
                        Phase phase, bool update_running = true);

struct RefinedPoint {
  Point2 position;
  bool clamped = false;
};

/// s + r, clamped to the grid.
RefinedPoint refine_coordinate(Point2 guided, Point2 offset, GridSize grid) noexcept;

}  // namespace gpcnn

#endif  // GPCNN_GPR_HPP_
