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

#include "gpcnn/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Core>

#include "gpcnn/error.hpp"
#include "gpcnn/numerics/ops.hpp"

namespace gpcnn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::OuterStride<>;
using ConstRowsMap = Eigen::Map<const RowMatrix, 0, Strided>;
using RowsMap = Eigen::Map<RowMatrix, 0, Strided>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

std::string edge_name(const MessageEdge& e) {
  return "gpr.T." + std::to_string(e.source) + "->" + std::to_string(e.target);
}

Tensor uniform(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

LinearIndex add_linear(ParameterStore& store, const std::string& name, int in, int out,
                       double bound, Rng& rng) {
  LinearIndex idx;
  idx.weight = store.add(name + ".weight",
                         uniform({static_cast<std::size_t>(in), static_cast<std::size_t>(out)}, bound, rng));
  idx.bias = store.add(name + ".bias", Tensor(Shape{static_cast<std::size_t>(out)}));
  return idx;
}

BatchNormIndex add_batchnorm(ParameterStore& store, const std::string& name, int channels) {
  const Shape shape{static_cast<std::size_t>(channels)};
  BatchNormIndex idx;
  idx.gamma = store.add(name + ".gamma", Tensor(shape, 1.0));
  idx.beta = store.add(name + ".beta", Tensor(shape, 0.0));
  idx.running_mean = store.add(name + ".running_mean", Tensor(shape, 0.0), false);
  idx.running_var = store.add(name + ".running_var", Tensor(shape, 1.0), false);
  return idx;
}

Var linear(const Var& x, const LinearIndex& idx, ParameterStore& store) {
  Tape& tape = x.tape();
  return add_bias(matmul(x, tape.param(store[idx.weight])), tape.param(store[idx.bias]));
}

Var batchnorm_layer(const Var& x, const BatchNormIndex& idx, ParameterStore& store, Phase phase,
                    bool update_running) {
  Tape& tape = x.tape();
  return batchnorm(x, tape.param(store[idx.gamma]), tape.param(store[idx.beta]),
                   store[idx.running_mean].value, store[idx.running_var].value, phase,
                   update_running);
}

}  // namespace

Skeleton::Skeleton(int num_keypoints, std::vector<Edge> edges)
    : num_keypoints_(num_keypoints), edges_(std::move(edges)) {
  GPCNN_REQUIRE(num_keypoints_ >= 1, ErrorCode::kConfig, "skeleton needs at least one keypoint");
  std::vector<std::vector<int>> adjacent(static_cast<std::size_t>(num_keypoints_));
  for (const auto& [a, b] : edges_) {
    GPCNN_REQUIRE(a >= 0 && a < num_keypoints_ && b >= 0 && b < num_keypoints_, ErrorCode::kConfig,
            "skeleton edge (" + std::to_string(a) + ", " + std::to_string(b) + ") out of range");
    GPCNN_REQUIRE(a != b, ErrorCode::kConfig, "skeleton edge list contains self-edge " + std::to_string(a));
    adjacent[static_cast<std::size_t>(a)].push_back(b);
    adjacent[static_cast<std::size_t>(b)].push_back(a);
  }
  neighborhoods_.resize(adjacent.size());
  for (std::size_t k = 0; k < adjacent.size(); ++k) {
    auto& adj = adjacent[k];
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    neighborhoods_[k].push_back(static_cast<int>(k));
    neighborhoods_[k].insert(neighborhoods_[k].end(), adj.begin(), adj.end());
  }
  // Connectivity by flood fill from keypoint 0.
  std::vector<char> seen(adjacent.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    for (int j : adjacent[static_cast<std::size_t>(k)]) {
      if (!seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        stack.push_back(j);
      }
    }
  }
  GPCNN_REQUIRE(std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; }), ErrorCode::kConfig,
          "skeleton graph is not connected");
}

Skeleton Skeleton::coco17() {
  return Skeleton(17, {{15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
                       {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
                       {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6}});
}

Skeleton Skeleton::chain(int num_keypoints) {
  std::vector<Edge> edges;
  for (int k = 0; k + 1 < num_keypoints; ++k) edges.emplace_back(k, k + 1);
  return Skeleton(num_keypoints, std::move(edges));
}

std::string_view to_string(GprVariant variant) noexcept {
  switch (variant) {
    case GprVariant::kFull: return "full";
    case GprVariant::kStructAgnostic: return "struct_agnostic";
    case GprVariant::kVa: return "va";
    case GprVariant::kVb: return "vb";
    case GprVariant::kVc: return "vc";
  }
  return "unknown";
}

GprVariant parse_variant(std::string_view name) {
  for (GprVariant v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  fail(ErrorCode::kConfig, "unknown GPR variant '" + std::string(name) + "'");
}

GprParams GprParams::create(ParameterStore& store, const Skeleton& skeleton, int channels, Rng& rng) {
  GPCNN_REQUIRE(channels >= 1, ErrorCode::kConfig, "GPR channel count must be positive");
  GprParams params(skeleton, channels);
  const auto c = static_cast<std::size_t>(channels);
  for (int k = 0; k < skeleton.num_keypoints(); ++k) {
    for (int j : skeleton.neighborhood(k)) {
      const MessageEdge edge{j, k};
      if (j == k) params.self_edges_.push_back(params.edges_.size());
      Tensor weight = uniform({c, c}, 0.05, rng);
      for (std::size_t i = 0; i < c; ++i) weight.at(i, i) += 1.0;
      LinearIndex idx;
      idx.weight = store.add(edge_name(edge) + ".weight", std::move(weight));
      idx.bias = store.add(edge_name(edge) + ".bias", Tensor(Shape{c}));
      params.edges_.push_back(edge);
      params.transforms_.push_back(idx);
    }
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  params.fc1 = add_linear(store, "head.fc1", channels, channels, bound, rng);
  params.bn1 = add_batchnorm(store, "head.bn1", channels);
  params.fc2 = add_linear(store, "head.fc2", channels, channels, bound, rng);
  params.bn2 = add_batchnorm(store, "head.bn2", channels);
  params.cls = add_linear(store, "head.cls", channels, 2, bound, rng);
  // Small regression init keeps refined coordinates near the guided points.
  params.reg = add_linear(store, "head.reg", channels, 2, 0.01 * bound, rng);
  return params;
}

PoseGraph build_pose_graph(int index, const SampleBatch& batch, const Tensor& features,
                           const Skeleton& skeleton) {
  GPCNN_REQUIRE(features.rank() == 3, ErrorCode::kDimension, "build_pose_graph: features must be [H, W, C]");
  const int k_count = skeleton.num_keypoints();
  GPCNN_REQUIRE(static_cast<int>(batch.keypoints.size()) == k_count, ErrorCode::kDimension,
          "build_pose_graph: batch has " + std::to_string(batch.keypoints.size()) +
              " keypoints, skeleton " + std::to_string(k_count));
  GPCNN_REQUIRE(index >= 0 && index < batch.count, ErrorCode::kIndexOutOfRange,
          "build_pose_graph: graph index " + std::to_string(index) + " of " +
              std::to_string(batch.count));
  const std::size_t c = features.dim(2);
  const Point2 centre{(static_cast<double>(features.dim(1)) - 1.0) / 2.0,
                      (static_cast<double>(features.dim(0)) - 1.0) / 2.0};
  PoseGraph graph;
  graph.features = Tensor(Shape{static_cast<std::size_t>(k_count), c});
  for (int k = 0; k < k_count; ++k) {
    const auto& pts = batch.keypoints[static_cast<std::size_t>(k)].points;
    GuidedPoint node;
    if (pts.empty()) {
      node.keypoint = k;
      node.position = centre;
      graph.active.push_back(0);
    } else {
      GPCNN_REQUIRE(static_cast<std::size_t>(index) < pts.size(), ErrorCode::kIndexOutOfRange,
              "build_pose_graph: keypoint " + std::to_string(k) + " has only " +
                  std::to_string(pts.size()) + " points");
      node = pts[static_cast<std::size_t>(index)];
      graph.active.push_back(1);
    }
    const auto f = bilinear_sample(features, node.position).values;
    std::copy(f.begin(), f.end(), graph.features.data() + static_cast<std::size_t>(k) * c);
    graph.nodes.push_back(node);
  }
  return graph;
}

double message_weight(GprVariant variant, double heat, bool reliable, bool active) noexcept {
  if (!active) return 0.0;
  switch (variant) {
    case GprVariant::kFull:
    case GprVariant::kVc: return reliable ? heat : 0.0;
    case GprVariant::kVa: return 1.0;
    case GprVariant::kVb: return reliable ? 1.0 : 0.0;
    case GprVariant::kStructAgnostic: return 0.0;
  }
  return 0.0;
}

Var gpr_forward(const GraphBatch& graphs, const GprParams& params, ParameterStore& store,
                GprVariant variant) {
  Tape& tape = graphs.features.tape();
  const Tensor& fv = graphs.features.value();
  const Tensor& hv = graphs.heat.value();
  const auto g_count = static_cast<std::size_t>(graphs.graphs);
  const auto k_count = static_cast<std::size_t>(params.skeleton().num_keypoints());
  const auto c = static_cast<std::size_t>(params.channels());
  require_shape(fv, Shape{g_count, k_count, c}, "gpr_forward features");
  require_shape(hv, Shape{g_count, k_count}, "gpr_forward heat");
  GPCNN_REQUIRE(graphs.reliable.size() == g_count * k_count && graphs.active.size() == g_count * k_count,
          ErrorCode::kDimension, "gpr_forward: reliability/activity flags must cover every node");
  require_finite(fv, "gpr_forward features");
  require_finite(hv, "gpr_forward heat");

  const auto& edges = params.edges();
  const std::size_t e_count = edges.size();
  const auto row_stride = static_cast<Eigen::Index>(k_count * c);
  const auto gi = static_cast<Eigen::Index>(g_count), ci = static_cast<Eigen::Index>(c);

  std::vector<Var> weights, biases;
  weights.reserve(e_count);
  biases.reserve(e_count);
  for (std::size_t e = 0; e < e_count; ++e) {
    weights.push_back(tape.param(store[params.transform(e).weight]));
    biases.push_back(tape.param(store[params.transform(e).bias]));
  }

  // omega[e * G + g]: weight of edge e in graph g.
  std::vector<double> omega(e_count * g_count, 0.0);
  std::vector<char> used(e_count, 0);
  for (std::size_t e = 0; e < e_count; ++e) {
    const auto src = static_cast<std::size_t>(edges[e].source);
    if (edges[e].source == edges[e].target) {
      std::fill_n(omega.begin() + static_cast<std::ptrdiff_t>(e * g_count), g_count, 1.0);
      used[e] = 1;
      continue;
    }
    if (variant == GprVariant::kStructAgnostic) continue;
    for (std::size_t g = 0; g < g_count; ++g) {
      const std::size_t node = g * k_count + src;
      const double w = message_weight(variant, hv[node], graphs.reliable[node] != 0,
                                      graphs.active[node] != 0);
      omega[e * g_count + g] = w;
      if (w != 0.0) used[e] = 1;
    }
  }

  // messages[e] = F_src * T_e + b_e, [G, C].
  std::vector<RowMatrix> messages(e_count);
  Tensor out(Shape{g_count, k_count, c});
  std::vector<double> z(g_count * k_count, 0.0);
  for (std::size_t e = 0; e < e_count; ++e) {
    if (!used[e]) continue;
    const auto src = static_cast<std::size_t>(edges[e].source);
    const auto dst = static_cast<std::size_t>(edges[e].target);
    ConstRowsMap f_src(fv.data() + src * c, gi, ci, Strided(row_stride));
    messages[e].noalias() = f_src * ConstMatrixMap(weights[e].value().data(), ci, ci);
    messages[e].rowwise() += Eigen::Map<const Eigen::RowVectorXd>(biases[e].value().data(), ci);
    for (std::size_t g = 0; g < g_count; ++g) {
      const double w = omega[e * g_count + g];
      if (w == 0.0) continue;
      double* row = out.data() + (g * k_count + dst) * c;
      const double* m = messages[e].data() + g * c;
      for (std::size_t j = 0; j < c; ++j) row[j] += w * m[j];
      z[g * k_count + dst] += w;
    }
  }
  for (std::size_t node = 0; node < g_count * k_count; ++node) {
    double* row = out.data() + node * c;
    for (std::size_t j = 0; j < c; ++j) row[j] /= z[node];
  }
  require_finite(out, "gpr_forward output");

  std::vector<std::size_t> weight_ids, bias_ids;
  for (std::size_t e = 0; e < e_count; ++e) {
    weight_ids.push_back(weights[e].id());
    bias_ids.push_back(biases[e].id());
  }
  const std::size_t f_id = graphs.features.id(), h_id = graphs.heat.id();
  const bool heat_weighted = variant == GprVariant::kFull || variant == GprVariant::kVc;
  const bool needs_grad = tape.requires_grad(graphs.features) || tape.requires_grad(graphs.heat) ||
                          std::any_of(weights.begin(), weights.end(),
                                      [&](const Var& v) { return tape.requires_grad(v); }) ||
                          std::any_of(biases.begin(), biases.end(),
                                      [&](const Var& v) { return tape.requires_grad(v); });

  return tape.record(
      std::move(out),
      [=, edges = edges, omega = std::move(omega), used = std::move(used),
       messages = std::move(messages), z = std::move(z), reliable = graphs.reliable,
       active = graphs.active](Tape& t, std::size_t self) {
        const Tensor& dout = t.grad(self);
        const Tensor& gout = t.value(self);
        for (std::size_t e = 0; e < e_count; ++e) {
          if (!used[e]) continue;
          const auto src = static_cast<std::size_t>(edges[e].source);
          const auto dst = static_cast<std::size_t>(edges[e].target);
          const bool self_edge = src == dst;
          RowMatrix dmsg = RowMatrix::Zero(gi, ci);
          for (std::size_t g = 0; g < g_count; ++g) {
            const std::size_t node = g * k_count + dst;
            const double w = omega[e * g_count + g];
            if (w == 0.0 && !(heat_weighted && !self_edge)) continue;
            const double* dg = dout.data() + node * c;
            const double inv_z = 1.0 / z[node];
            if (w != 0.0) {
              for (std::size_t j = 0; j < c; ++j) dmsg(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) = w * inv_z * dg[j];
            }
            // Heat-weighted messages: d omega / d h = 1 for reliable, active sources.
            const std::size_t src_node = g * k_count + src;
            if (heat_weighted && !self_edge && reliable[src_node] && active[src_node] &&
                t.requires_grad(h_id)) {
              const double* m = messages[e].data() + g * c;
              const double* go = gout.data() + node * c;
              double d_omega = 0.0;
              for (std::size_t j = 0; j < c; ++j) d_omega += (m[j] - go[j]) * dg[j];
              t.grad(h_id)[src_node] += d_omega * inv_z;
            }
          }
          if (t.requires_grad(weight_ids[e])) {
            ConstRowsMap f_src(t.value(f_id).data() + src * c, gi, ci, Strided(row_stride));
            MatrixMap(t.grad(weight_ids[e]).data(), ci, ci).noalias() += f_src.transpose() * dmsg;
          }
          if (t.requires_grad(bias_ids[e])) {
            double* db = t.grad(bias_ids[e]).data();
            for (Eigen::Index g = 0; g < gi; ++g)
              for (Eigen::Index j = 0; j < ci; ++j) db[j] += dmsg(g, j);
          }
          if (t.requires_grad(f_id)) {
            RowsMap df_src(t.grad(f_id).data() + src * c, gi, ci, Strided(row_stride));
            df_src.noalias() += dmsg * ConstMatrixMap(t.value(weight_ids[e]).data(), ci, ci).transpose();
          }
        }
      },
      needs_grad);
}

HeadOutput head_forward(const Var& refined, const GprParams& params, ParameterStore& store,
                        Phase phase, bool update_running) {
  GPCNN_REQUIRE(refined.value().rank() == 2 &&
              refined.value().dim(1) == static_cast<std::size_t>(params.channels()),
          ErrorCode::kDimension, "head_forward: expected [R, C] refined features");
  Var x = relu(batchnorm_layer(linear(refined, params.fc1, store), params.bn1, store, phase,
                               update_running));
  x = relu(batchnorm_layer(linear(x, params.fc2, store), params.bn2, store, phase, update_running));
  return {linear(x, params.cls, store), linear(x, params.reg, store)};
}

RefinedPoint refine_coordinate(Point2 guided, Point2 offset, GridSize grid) noexcept {
  const Point2 raw = guided + offset;
  RefinedPoint out;
  out.position = {std::clamp(raw.x, 0.0, static_cast<double>(grid.width - 1)),
                  std::clamp(raw.y, 0.0, static_cast<double>(grid.height - 1))};
  out.clamped = out.position != raw;
  return out;
}

}  // namespace gpcnn
