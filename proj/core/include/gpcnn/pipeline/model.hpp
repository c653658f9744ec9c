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

#ifndef GPCNN_PIPELINE_MODEL_HPP_
#define GPCNN_PIPELINE_MODEL_HPP_

#include <cstdint>
#include <span>

#include "gpcnn/gpr.hpp"
#include "gpcnn/numerics/tape.hpp"
#include "gpcnn/pipeline/config.hpp"

namespace gpcnn {

struct ConvIndex {
  std::size_t kernel = 0;  // [kh, kw, Cin, Cout]
  std::size_t bias = 0;    // [Cout]
};

/// Stage-1 backbone (trunk 3x3 conv + ReLU feeding a 1x1 heatmap branch and a
/// 3x3 localization branch) plus all stage-2 parameters, in one store.
class Model {
 public:
  /// Initializes from the config seed. Conv weights and biases are
  /// uniform(+-1/sqrt(fan_in)).
  explicit Model(const RunConfig& config);
  Model(const RunConfig& config, std::uint64_t init_seed);

  const RunConfig& config() const noexcept { return config_; }
  ParameterStore& store() noexcept { return store_; }
  const ParameterStore& store() const noexcept { return store_; }
  const GprParams& gpr() const noexcept { return gpr_; }
  GprVariant variant() const noexcept { return config_.variant; }

  ConvIndex trunk, heatmap, localization;

 private:
  RunConfig config_;
  ParameterStore store_;
  GprParams gpr_;
};

struct Stage1Output {
  Var heatmaps;  // [H, W, K]
  Var features;  // [H, W, C]
};

/// V = relu(trunk(input)); heatmaps = heatmap(V); features = localization(V).
Stage1Output forward_stage1(Tape& tape, Model& model, const Tensor& input);

struct TrunkOutput {
  Var trunk;     // V [H, W, C]
  Var heatmaps;  // [H, W, K]
};

/// The heatmap half of forward_stage1.
TrunkOutput forward_trunk(Tape& tape, Model& model, const Tensor& input);

/// Localization features evaluated only at `pixels` (see bilinear_support);
/// identical to forward_stage1 there, zero elsewhere.
Var localization_at(Tape& tape, Model& model, const Var& trunk, std::span<const std::size_t> pixels);

}  // namespace gpcnn

#endif  // GPCNN_PIPELINE_MODEL_HPP_
