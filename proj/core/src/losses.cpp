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

#include "gpcnn/losses.hpp"

#include <cmath>

#include "gpcnn/error.hpp"
#include "gpcnn/numerics/ops.hpp"

namespace gpcnn {
namespace {

Var zero(Tape& tape) { return tape.constant(Tensor(Shape{1}, 0.0)); }

void require_rows(const Var& x, std::size_t rows, const char* what) {
  GPCNN_REQUIRE(x.value().rank() == 2 && x.value().dim(0) == rows && x.value().dim(1) == 2,
          ErrorCode::kDimension,
          std::string(what) + ": expected [" + std::to_string(rows) + ", 2], got " +
              to_string(x.value().shape()));
}

}  // namespace

ScalarLoss stage1_loss(const Var& predicted, const Tensor& target, std::span<const double> gamma) {
  Tape& tape = predicted.tape();
  const Tensor& p = predicted.value();
  GPCNN_REQUIRE(p.shape() == target.shape(), ErrorCode::kDimension,
          "stage1_loss: prediction " + to_string(p.shape()) + " vs target " +
              to_string(target.shape()));
  GPCNN_REQUIRE(p.rank() == 3 && p.dim(2) == gamma.size(), ErrorCode::kDimension,
          "stage1_loss: expected [H, W, K] with one gamma per channel");
  require_finite(p, "stage1_loss prediction");
  double gamma_sum = 0.0;
  for (double g : gamma) gamma_sum += g;
  if (gamma_sum <= 0.0) return {zero(tape), true};

  const std::size_t k_count = gamma.size();
  const std::size_t pixels = p.dim(0) * p.dim(1);
  // coeff_k = gamma_k / (sum gamma * pixels)
  std::vector<double> coeff(k_count);
  for (std::size_t k = 0; k < k_count; ++k) coeff[k] = gamma[k] / (gamma_sum * static_cast<double>(pixels));
  double loss = 0.0;
  for (std::size_t base = 0; base < p.size(); base += k_count) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const double d = p[base + k] - target[base + k];
      loss += coeff[k] * d * d;
    }
  }
  const std::size_t ip = predicted.id();
  Var out = tape.record(
      Tensor(Shape{1}, loss),
      [ip, coeff, target](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        const Tensor& pv = t.value(ip);
        Tensor& gp = t.grad(ip);
        const std::size_t k_count = coeff.size();
        for (std::size_t base = 0; base < pv.size(); base += k_count) {
          for (std::size_t k = 0; k < k_count; ++k) {
            gp[base + k] += 2.0 * g * coeff[k] * (pv[base + k] - target[base + k]);
          }
        }
      },
      tape.requires_grad(predicted));
  return {out, false};
}

double positive_weight(Point2 position, Point2 truth, double sigma) noexcept {
  return std::exp(-squared_distance(position, truth) / (2.0 * sigma * sigma));
}

std::vector<std::uint8_t> positive_mask(std::span<const GuidedPoint> points, Point2 truth,
                                        double sigma) {
  std::vector<std::uint8_t> mask(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    mask[i] = pt.label == PointLabel::kUnset ? is_positive(pt.position, truth, sigma)
                                             : pt.label == PointLabel::kPositive;
  }
  return mask;
}

KeypointLoss cls_loss(const Var& logits, std::span<const GuidedPoint> points, Point2 truth,
                      double sigma) {
  require_rows(logits, points.size(), "cls_loss");
  const auto mask = positive_mask(points, truth, sigma);
  KeypointLoss out;
  for (auto m : mask) (m ? out.positives : out.negatives)++;
  out.flag = out.positives == 0 || out.negatives == 0;

  std::vector<int> targets(points.size());
  std::vector<double> weights(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (mask[i]) {
      targets[i] = 1;
      weights[i] = 0.5 * positive_weight(points[i].position, truth, sigma) / out.positives;
    } else {
      targets[i] = 0;
      weights[i] = 0.5 / out.negatives;
    }
  }
  if (points.empty()) {
    out.value = zero(logits.tape());
    return out;
  }
  out.value = sum(softmax_xent(logits, targets, weights));
  return out;
}

KeypointLoss reg_loss(const Var& offsets, std::span<const GuidedPoint> points, Point2 truth,
                      double sigma) {
  require_rows(offsets, points.size(), "reg_loss");
  const auto mask = positive_mask(points, truth, sigma);
  KeypointLoss out;
  for (auto m : mask) (m ? out.positives : out.negatives)++;
  if (out.positives == 0) {
    out.flag = true;
    out.value = zero(offsets.tape());
    return out;
  }
  Tensor target(Shape{points.size(), 2});
  std::vector<double> weights(points.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point2 d = truth - points[i].position;
    target.at(i, 0) = d.x;
    target.at(i, 1) = d.y;
    if (mask[i]) weights[i] = 1.0 / out.positives;
  }
  out.value = weighted_sum(l1_loss(offsets, target), weights);
  return out;
}

ScalarLoss stage2_loss(std::span<const Var> cls, std::span<const Var> reg,
                       std::span<const double> gamma, double lambda) {
  GPCNN_REQUIRE(cls.size() == gamma.size() && reg.size() == gamma.size(), ErrorCode::kDimension,
          "stage2_loss: one cls/reg term per keypoint expected");
  double gamma_sum = 0.0;
  for (double g : gamma) gamma_sum += g;
  std::vector<Var> terms;
  std::vector<double> coeffs;
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    if (gamma[k] == 0.0) continue;
    GPCNN_REQUIRE(cls[k].valid() && reg[k].valid(), ErrorCode::kEmptyInput,
            "stage2_loss: keypoint " + std::to_string(k) + " is supervised but has no loss term");
    terms.push_back(cls[k]);
    coeffs.push_back(gamma[k] / gamma_sum);
    terms.push_back(reg[k]);
    coeffs.push_back(lambda * gamma[k] / gamma_sum);
  }
  if (gamma_sum <= 0.0 || terms.empty()) {
    for (const auto& v : cls) {
      if (v.valid()) return {zero(v.tape()), true};
    }
    fail(ErrorCode::kEmptyInput, "stage2_loss: no keypoint supervised and no tape to record on");
  }
  return {linear_combination(terms, coeffs), false};
}

Var total_loss(const Var& stage1, const Var& stage2) { return add(stage1, stage2); }

nlohmann::json LossReport::to_json() const {
  return {{"stage1", stage1},
          {"stage1_weight", stage1_weight},
          {"stage2", stage2},
          {"total", total},
          {"cls", cls},
          {"reg", reg},
          {"positives", positives},
          {"negatives", negatives}};
}

}  // namespace gpcnn
