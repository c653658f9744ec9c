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


#include "op_suite.hpp"

#include <functional>
#include <random>

#include "gpcnn/geometry.hpp"
#include "gpcnn/gpr.hpp"
#include "gpcnn/losses.hpp"
#include "gpcnn/numerics/ops.hpp"
#include "gpr_oracle.hpp"

namespace gpcnn::testing {
namespace {

Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Var project(const Var& out, std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> w(out.value().size());
  for (double& v : w) v = dist(rng);
  return weighted_sum(out, w);
}

// Registers `inputs` as parameters, appended after whatever `store` already holds.
GradCheckResult check(ParameterStore& store, std::vector<Tensor> inputs,
                      const std::function<Var(Tape&, std::vector<Var>&)>& op, std::uint64_t seed,
                      double tolerance, double step = GradCheckOptions{}.step) {
  const std::size_t first = store.size();
  for (std::size_t i = 0; i < inputs.size(); ++i)
    store.add("input" + std::to_string(i), std::move(inputs[i]));
  GradCheckOptions opts;
  opts.tolerance = tolerance;
  opts.step = step;
  opts.seed = seed;
  return grad_check(
      store,
      [&](Tape& tape) {
        std::vector<Var> vars;
        for (std::size_t i = first; i < store.size(); ++i) vars.push_back(tape.param(store[i]));
        return project(op(tape, vars), seed);
      },
      opts);
}

GradCheckResult check(std::vector<Tensor> inputs, const std::function<Var(Tape&, std::vector<Var>&)>& op,
                      std::uint64_t seed, double tolerance) {
  ParameterStore store;
  return check(store, std::move(inputs), op, seed, tolerance);
}

std::vector<GuidedPoint> labelled_points(int n, Point2 truth, double sigma, Rng& rng) {
  std::uniform_real_distribution<double> off(-4 * sigma, 4 * sigma);
  std::vector<GuidedPoint> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Point2 p{truth.x + off(rng), truth.y + off(rng)};
    if (i == 0) p = truth;
    if (i == 1) p = {truth.x + 5 * sigma, truth.y};
    pts[static_cast<std::size_t>(i)].position = p;
    pts[static_cast<std::size_t>(i)].label =
        is_positive(p, truth, sigma) ? PointLabel::kPositive : PointLabel::kNegative;
  }
  return pts;
}

}  // namespace

std::vector<NamedCheck> op_gradient_suite(std::uint64_t seed, double tol) {
  Rng rng(seed);
  std::vector<NamedCheck> out;
  auto record = [&](const char* name, GradCheckResult r) { out.push_back({name, std::move(r)}); };

  record("matmul", check({random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)},
                      [](Tape&, std::vector<Var>& v) { return matmul(v[0], v[1]); }, seed, tol));
  record("add_bias", check({random_tensor({3, 4, 2}, rng), random_tensor({2}, rng)},
                        [](Tape&, std::vector<Var>& v) { return add_bias(v[0], v[1]); }, seed, tol));
  record("add_scale", check({random_tensor({5}, rng), random_tensor({5}, rng)},
                         [](Tape&, std::vector<Var>& v) { return add(scale(v[0], -1.5), v[1]); }, seed, tol));
  record("conv2d", check({random_tensor({5, 4, 2}, rng), random_tensor({3, 3, 2, 3}, rng)},
                      [](Tape&, std::vector<Var>& v) { return conv2d(v[0], v[1]); }, seed, tol));
  const std::vector<std::size_t> pixels = {0, 6, 13, 19};
  record("conv2d_sparse", check({random_tensor({5, 4, 2}, rng), random_tensor({3, 3, 2, 3}, rng)},
                             [&](Tape&, std::vector<Var>& v) { return conv2d(v[0], v[1], pixels); }, seed, tol));
  Tensor rm(Shape{3}), rv(Shape{3}, 1.0);
  record("batchnorm_train",
      check({random_tensor({6, 3}, rng), random_tensor({3}, rng, 0.5, 1.5), random_tensor({3}, rng)},
            [&](Tape&, std::vector<Var>& v) { return batchnorm(v[0], v[1], v[2], rm, rv, Phase::kTrain, false); },
            seed, tol));
  record("batchnorm_eval",
      check({random_tensor({6, 3}, rng), random_tensor({3}, rng), random_tensor({3}, rng)},
            [&](Tape&, std::vector<Var>& v) { return batchnorm(v[0], v[1], v[2], rm, rv, Phase::kEval, false); },
            seed, tol));
  // Inputs kept away from kinks so central differences stay smooth.
  Tensor kinked = random_tensor({8}, rng, 0.1, 1.0);
  for (std::size_t i = 0; i < kinked.size(); i += 2) kinked[i] = -kinked[i];
  record("relu", check({kinked}, [](Tape&, std::vector<Var>& v) { return relu(v[0]); }, seed, tol));
  Tensor clamped = kinked;
  clamped[1] = 1.4;
  record("clamp", check({clamped}, [](Tape&, std::vector<Var>& v) { return clamp(v[0], 0.0, 1.0); }, seed, tol));
  const std::vector<int> targets = {0, 1, 1, 0};
  const std::vector<double> weights = {0.3, 1.0, 2.0, 0.7};
  record("softmax_xent", check({random_tensor({4, 2}, rng, -2, 2)},
                            [&](Tape&, std::vector<Var>& v) { return softmax_xent(v[0], targets, weights); },
                            seed, tol));
  const Tensor target = random_tensor({3, 2}, rng);
  Tensor pred = target;
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += (i % 2 ? 0.3 : -0.4) + 0.1 * static_cast<double>(i);
  record("l1_loss", check({pred}, [&](Tape&, std::vector<Var>& v) { return l1_loss(v[0], target); }, seed, tol));
  record("sum", check({random_tensor({2, 3}, rng)}, [](Tape&, std::vector<Var>& v) { return scale(sum(v[0]), 2.0); },
                   seed, tol));
  const std::vector<double> coeffs = {0.5, -2.0};
  record("linear_combination",
      check({random_tensor({1}, rng), random_tensor({1}, rng)},
            [&](Tape&, std::vector<Var>& v) { return linear_combination(v, coeffs); }, seed, tol));
  const std::vector<std::size_t> rows = {2, 0, 2, 1};
  const std::vector<std::size_t> cols = {1, 0, 2, 2};
  record("row_ops", check({random_tensor({3, 3}, rng), random_tensor({2, 3}, rng)},
                       [&](Tape&, std::vector<Var>& v) {
                         const Var parts[] = {slice_rows(v[0], 1, 2), v[1]};
                         return pick_columns(gather_rows(reshape(concat_rows(parts), Shape{4, 3}), rows), cols);
                       },
                       seed, tol));

  std::uniform_real_distribution<double> ux(0, 6), uy(0, 5);
  std::vector<Point2> pts(5);
  for (auto& p : pts) p = {ux(rng), uy(rng)};
  record("sample_points", check({random_tensor({6, 7, 3}, rng)},
                             [&](Tape&, std::vector<Var>& v) { return sample_points(v[0], pts); }, seed, tol));

  {
    ParameterStore store;
    const GprParams params = GprParams::create(store, Skeleton::coco17(), 3, rng);
    std::uniform_real_distribution<double> u(-1, 1), unit(0, 1);
    for (std::size_t e = 0; e < params.edges().size(); ++e) {
      for (double& v : store[params.transform(e).weight].value.values()) v = u(rng);
      for (double& v : store[params.transform(e).bias].value.values()) v = u(rng);
    }
    std::vector<std::uint8_t> reliable(34), active(34);
    for (std::size_t i = 0; i < 34; ++i) reliable[i] = unit(rng) < 0.6, active[i] = unit(rng) < 0.9;
    // Heat stays off the clamp kinks at 0 and 1.
    for (GprVariant variant : kAllVariants) {
      ParameterStore local = store;
      record(variant == GprVariant::kFull ? "gpr_forward_full" : "gpr_forward_variant",
          check(local, {random_tensor({2, 17, 3}, rng), random_tensor({2, 17}, rng, 0.05, 0.95)},
                [&](Tape&, std::vector<Var>& v) {
                  return gpr_forward(GraphBatch{2, v[0], v[1], reliable, active}, params, local, variant);
                },
                seed, tol));
    }
  }

  {
    ParameterStore store;
    const GprParams params = GprParams::create(store, Skeleton::chain(2), 3, rng);
    offset_head_biases(params, store, rng);
    // Hidden ReLU units occasionally land within the default step of their
    // kink; a smaller step keeps the difference on one side.
    for (Phase phase : {Phase::kTrain, Phase::kEval}) {
      ParameterStore local = store;
      record(phase == Phase::kTrain ? "head_train" : "head_eval",
          check(local, {random_tensor({6, 3}, rng)},
                [&](Tape&, std::vector<Var>& v) {
                  const HeadOutput h = head_forward(v[0], params, local, phase, false);
                  const Var parts[] = {reshape(h.logits, Shape{12}), reshape(h.offsets, Shape{12})};
                  return concat_rows(parts);
                },
                seed, tol, 1e-7));
    }
  }

  const Tensor heat_target = random_tensor({5, 6, 4}, rng, 0, 1);
  const std::vector<double> gamma = {1, 0, 1, 1};
  record("stage1_loss", check({random_tensor({5, 6, 4}, rng)},
                           [&](Tape&, std::vector<Var>& v) {
                             return scale(stage1_loss(v[0], heat_target, gamma).value, 100.0);
                           },
                           seed, tol));
  const Point2 truth{10, 8};
  const auto points = labelled_points(12, truth, 2.0, rng);
  record("cls_loss", check({random_tensor({12, 2}, rng, -3, 3)},
                        [&](Tape&, std::vector<Var>& v) { return cls_loss(v[0], points, truth, 2.0).value; }, seed,
                        tol));
  record("reg_loss", check({random_tensor({12, 2}, rng, -3, 3)},
                        [&](Tape&, std::vector<Var>& v) { return reg_loss(v[0], points, truth, 2.0).value; }, seed,
                        tol));
  const std::vector<double> kp_gamma = {1.0, 0.0, 1.0};
  record("stage2_total", check({random_tensor({3}, rng, 0, 1), random_tensor({3}, rng, 0, 1), random_tensor({1}, rng)},
                            [&](Tape&, std::vector<Var>& v) {
                              std::vector<Var> c, r;
                              for (std::size_t k = 0; k < 3; ++k) {
                                c.push_back(slice_rows(v[0], k, 1));
                                r.push_back(slice_rows(v[1], k, 1));
                              }
                              return total_loss(v[2], stage2_loss(c, r, kp_gamma).value);
                            },
                            seed, tol));
  return out;
}

}  // namespace gpcnn::testing
