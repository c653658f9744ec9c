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

#include "gpcnn/pipeline/infer.hpp"

#include <algorithm>
#include <cmath>

#include "gpcnn/error.hpp"
#include "gpcnn/numerics/ops.hpp"

namespace gpcnn {

nlohmann::json Prediction::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& k : keypoints) {
    out.push_back({{"stage1", {k.stage1.x, k.stage1.y}},
                   {"refined", {k.refined.x, k.refined.y}},
                   {"score", k.score},
                   {"heat", k.heat},
                   {"reliable", k.reliable},
                   {"degenerate", k.degenerate},
                   {"clamped", k.clamped}});
  }
  return out;
}

Prediction infer(Model& model, const Tensor& input) {
  const Tensor* one[] = {&input};
  return infer_batch(model, one).front();
}

std::vector<Prediction> infer_batch(Model& model, std::span<const Tensor* const> inputs) {
  const RunConfig& cfg = model.config();
  const auto m = inputs.size();
  const auto k_count = static_cast<std::size_t>(cfg.num_keypoints);
  const auto c = static_cast<std::size_t>(cfg.channels);
  const GridSize grid = cfg.grid();
  if (m == 0) return {};

  std::vector<Prediction> out(m);
  Tensor features(Shape{m, k_count, c});
  Tensor heat(Shape{m, k_count});
  std::vector<std::uint8_t> reliable(m * k_count), active(m * k_count, 1);
  std::vector<Point2> guided(m * k_count);
  for (std::size_t i = 0; i < m; ++i) {
    // Stage 1 on its own tape so the large conv intermediates die here.
    Tape tape;
    const TrunkOutput s1 = forward_trunk(tape, model, *inputs[i]);
    const Tensor& hm = s1.heatmaps.value();
    out[i].keypoints.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const TestPoint tp = select_test_point(extract_channel(hm, static_cast<int>(k)), static_cast<int>(k));
      auto& kp = out[i].keypoints[k];
      kp.stage1 = tp.point.position;
      kp.heat = tp.point.heat;
      kp.degenerate = tp.degenerate;
      kp.reliable = compute_reliability(tp.point, Phase::kEval, std::nullopt, cfg.sigma, cfg.reliability());
      const std::size_t node = i * k_count + k;
      reliable[node] = kp.reliable;
      heat[node] = kp.heat;
      guided[node] = kp.stage1;
    }
    const std::span<const Point2> mine(guided.data() + i * k_count, k_count);
    const Var fm = localization_at(tape, model, s1.trunk, bilinear_support(grid, mine));
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto f = bilinear_sample(fm.value(), mine[k]).values;
      std::copy(f.begin(), f.end(), features.data() + (i * k_count + k) * c);
    }
  }

  Tape tape;
  GraphBatch graphs{static_cast<int>(m), tape.constant(std::move(features)), tape.constant(std::move(heat)),
                    std::move(reliable), std::move(active)};
  const Var refined = gpr_forward(graphs, model.gpr(), model.store(), model.variant());
  const HeadOutput head = head_forward(reshape(refined, Shape{m * k_count, c}), model.gpr(),
                                       model.store(), Phase::kEval, false);
  const Tensor& logits = head.logits.value();
  const Tensor& offsets = head.offsets.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::size_t row = i * k_count + k;
      auto& kp = out[i].keypoints[k];
      const RefinedPoint r =
          refine_coordinate(guided[row], Point2{offsets.at(row, 0), offsets.at(row, 1)}, grid);
      kp.refined = r.position;
      kp.clamped = r.clamped;
      kp.score = 1.0 / (1.0 + std::exp(logits.at(row, 0) - logits.at(row, 1)));
    }
  }
  return out;
}

}  // namespace gpcnn
