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

#include "gpcnn/pipeline/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gpcnn/error.hpp"
#include "gpcnn/numerics/ops.hpp"

namespace gpcnn {
namespace {

ConvIndex add_conv(ParameterStore& store, const std::string& name, std::size_t k, std::size_t cin,
                   std::size_t cout, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(k * k * cin));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor kernel(Shape{k, k, cin, cout});
  for (double& v : kernel.values()) v = dist(rng);
  Tensor bias(Shape{cout});
  for (double& v : bias.values()) v = dist(rng);
  return {store.add(name + ".kernel", std::move(kernel)), store.add(name + ".bias", std::move(bias))};
}

Var conv(Tape& tape, ParameterStore& store, const ConvIndex& idx, const Var& x) {
  return add_bias(conv2d(x, tape.param(store[idx.kernel])), tape.param(store[idx.bias]));
}

GprParams init(ParameterStore& store, const RunConfig& config, Rng& rng, ConvIndex& trunk,
               ConvIndex& heatmap, ConvIndex& localization) {
  config.validate();
  const auto d = static_cast<std::size_t>(config.input_channels);
  const auto c = static_cast<std::size_t>(config.channels);
  const auto k = static_cast<std::size_t>(config.num_keypoints);
  trunk = add_conv(store, "trunk", 3, d, c, rng);
  heatmap = add_conv(store, "heatmap", 1, c, k, rng);
  localization = add_conv(store, "localization", 3, c, c, rng);
  return GprParams::create(store, config.skeleton(), config.channels, rng);
}

}  // namespace

Model::Model(const RunConfig& config) : Model(config, config.seed) {}

Model::Model(const RunConfig& config, std::uint64_t init_seed)
    : config_(config),
      gpr_([&] {
        Rng rng = make_rng(init_seed, streams::kInit);
        return init(store_, config_, rng, trunk, heatmap, localization);
      }()) {}

TrunkOutput forward_trunk(Tape& tape, Model& model, const Tensor& input) {
  const RunConfig& cfg = model.config();
  require_shape(input,
                Shape{static_cast<std::size_t>(cfg.grid_height), static_cast<std::size_t>(cfg.grid_width),
                      static_cast<std::size_t>(cfg.input_channels)},
                "forward_stage1 input");
  ParameterStore& store = model.store();
  const Var v = relu(conv(tape, store, model.trunk, tape.constant(input)));
  return {v, conv(tape, store, model.heatmap, v)};
}

Stage1Output forward_stage1(Tape& tape, Model& model, const Tensor& input) {
  const TrunkOutput t = forward_trunk(tape, model, input);
  return {t.heatmaps, conv(tape, model.store(), model.localization, t.trunk)};
}

Var localization_at(Tape& tape, Model& model, const Var& trunk, std::span<const std::size_t> pixels) {
  ParameterStore& store = model.store();
  return add_bias(conv2d(trunk, tape.param(store[model.localization.kernel]), pixels),
                  tape.param(store[model.localization.bias]));
}

}  // namespace gpcnn
