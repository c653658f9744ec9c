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


#include <gtest/gtest.h>

#include <cmath>

#include "../common/gpr_oracle.hpp"
#include "gpcnn/error.hpp"
#include "gpcnn/gpr.hpp"
#include "helpers.hpp"

namespace gpcnn {
namespace {

using testing::GraphData;

void randomize_transforms(const GprParams& params, ParameterStore& store, Rng& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::size_t e = 0; e < params.edges().size(); ++e) {
    for (double& v : store[params.transform(e).weight].value.values()) v = dist(rng);
    for (double& v : store[params.transform(e).bias].value.values()) v = dist(rng);
  }
}

void set_identity(const GprParams& params, ParameterStore& store) {
  const auto c = static_cast<std::size_t>(params.channels());
  for (std::size_t e = 0; e < params.edges().size(); ++e) {
    Tensor& w = store[params.transform(e).weight].value;
    w.fill(0.0);
    for (std::size_t i = 0; i < c; ++i) w.at(i, i) = 1.0;
    store[params.transform(e).bias].value.fill(0.0);
  }
}

TEST(Skeleton, Validation) {
  EXPECT_THROW(Skeleton(3, {{0, 0}, {1, 2}}), Error);
  EXPECT_THROW(Skeleton(3, {{0, 3}}), Error);
  EXPECT_THROW(Skeleton(4, {{0, 1}, {2, 3}}), Error);
  const Skeleton s(3, {{2, 0}, {0, 1}});
  EXPECT_EQ(s.neighborhood(0), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(s.neighborhood(2), (std::vector<int>{2, 0}));
  const Skeleton coco = Skeleton::coco17();
  EXPECT_EQ(coco.num_keypoints(), 17);
  EXPECT_EQ(coco.edges().size(), 19u);
}

TEST(Variant, ParseRoundTrip) {
  for (GprVariant v : kAllVariants) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("vd"), Error);
}

TEST(Params, EdgeLayoutAndNames) {
  Rng rng(1);
  ParameterStore store;
  const GprParams p = GprParams::create(store, Skeleton::chain(3), 4, rng);
  // Per target: self first, then neighbours ascending; one transform each.
  ASSERT_EQ(p.edges().size(), 7u);
  EXPECT_EQ(p.edges()[p.self_edge(1)].source, 1);
  EXPECT_EQ(p.edges()[p.self_edge(1)].target, 1);
  EXPECT_NE(store.find("gpr.T.0->1.weight"), nullptr);
  EXPECT_NE(store.find("gpr.T.1->0.weight"), nullptr);
  EXPECT_FALSE(store.get("head.bn1.running_mean").trainable);
  // Near-identity init, zero bias.
  const Tensor& w = store[p.transform(0).weight].value;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_LE(std::abs(w.at(i, j) - (i == j ? 1.0 : 0.0)), 0.05);
  for (double b : store[p.transform(0).bias].value.values()) EXPECT_EQ(b, 0.0);
}

TEST(PoseGraph, GroupsByIndexAndMasksMissingKeypoints) {
  Rng rng(2);
  const Tensor features = testing::random_tensor({8, 10, 3}, rng);
  SampleBatch batch;
  batch.count = 2;
  batch.keypoints.resize(2);
  batch.keypoints[0].points = {GuidedPoint{0, {1.5, 2.5}}, GuidedPoint{0, {4.0, 3.0}}};
  const PoseGraph g = build_pose_graph(1, batch, features, Skeleton::chain(2));
  EXPECT_EQ(g.active, (std::vector<std::uint8_t>{1, 0}));
  EXPECT_EQ(g.nodes[0].position, (Point2{4.0, 3.0}));
  EXPECT_EQ(g.nodes[1].position, (Point2{4.5, 3.5}));
  const auto f = bilinear_sample(features, {4.0, 3.0}).values;
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(g.features.at(0, c), f[c]);
  EXPECT_THROW(build_pose_graph(2, batch, features, Skeleton::chain(2)), Error);
}

TEST(MessageWeight, Variants) {
  EXPECT_EQ(message_weight(GprVariant::kFull, 0.4, true, true), 0.4);
  EXPECT_EQ(message_weight(GprVariant::kFull, 0.4, false, true), 0.0);
  EXPECT_EQ(message_weight(GprVariant::kVa, 0.4, false, true), 1.0);
  EXPECT_EQ(message_weight(GprVariant::kVb, 0.4, true, true), 1.0);
  EXPECT_EQ(message_weight(GprVariant::kVb, 0.4, false, true), 0.0);
  EXPECT_EQ(message_weight(GprVariant::kVc, 0.4, true, true), 0.4);
  EXPECT_EQ(message_weight(GprVariant::kStructAgnostic, 0.4, true, true), 0.0);
  EXPECT_EQ(message_weight(GprVariant::kVa, 0.4, true, false), 0.0);
}

TEST(GprForward, TwoNodeHandExample) {
  Rng rng(3);
  ParameterStore store;
  const GprParams p = GprParams::create(store, Skeleton::chain(2), 2, rng);
  set_identity(p, store);
  GraphData d{1, 2, 2, {1, 0, 3, 0}, {1.0, 0.5}, {1, 1}, {1, 1}};
  const auto out = testing::gpr_library(d, p, store, GprVariant::kFull);
  EXPECT_NEAR(out[0], 5.0 / 3.0, 1e-15);
  EXPECT_EQ(out[1], 0.0);
}

TEST(GprForward, MatchesScalarOracle) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const int k = std::uniform_int_distribution<int>(1, 6)(rng);
    const int c = std::uniform_int_distribution<int>(1, 4)(rng);
    ParameterStore store;
    const GprParams p = GprParams::create(store, testing::random_skeleton(k, rng), c, rng);
    randomize_transforms(p, store, rng);
    const GraphData d = testing::random_graphs(3, k, c, rng);
    for (GprVariant v : kAllVariants) {
      const auto lib = testing::gpr_library(d, p, store, v);
      const auto ref = testing::gpr_oracle(d, p, store, v);
      for (std::size_t i = 0; i < lib.size(); ++i) EXPECT_NEAR(lib[i], ref[i], 1e-10) << seed;
    }
  }
}

TEST(GprForward, DegradesToSelfTransform) {
  Rng rng(4);
  ParameterStore store;
  const GprParams p = GprParams::create(store, Skeleton::coco17(), 3, rng);
  randomize_transforms(p, store, rng);
  GraphData d = testing::random_graphs(2, 17, 3, rng, 1.0);
  std::fill(d.reliable.begin(), d.reliable.end(), 0);
  const auto self = testing::self_messages(d, p, store);
  for (GprVariant v : {GprVariant::kFull, GprVariant::kVb, GprVariant::kVc})
    EXPECT_EQ(testing::gpr_library(d, p, store, v), self) << to_string(v);
}

TEST(GprForward, FullHeatAndReliabilityMakesVariantsAgree) {
  Rng rng(5);
  ParameterStore store;
  const GprParams p = GprParams::create(store, Skeleton::coco17(), 4, rng);
  randomize_transforms(p, store, rng);
  GraphData d = testing::random_graphs(2, 17, 4, rng, 1.0);
  std::fill(d.heat.begin(), d.heat.end(), 1.0);
  std::fill(d.reliable.begin(), d.reliable.end(), 1);
  const auto full = testing::gpr_library(d, p, store, GprVariant::kFull);
  EXPECT_EQ(full, testing::gpr_library(d, p, store, GprVariant::kVa));
  EXPECT_EQ(full, testing::gpr_library(d, p, store, GprVariant::kVb));
}

TEST(GprForward, ConvexCombinationOfMessages) {
  // With identity transforms each output lies in the coordinatewise hull of
  // the neighbourhood features.
  Rng rng(6);
  ParameterStore store;
  const GprParams p = GprParams::create(store, Skeleton::coco17(), 2, rng);
  set_identity(p, store);
  const GraphData d = testing::random_graphs(4, 17, 2, rng);
  const auto out = testing::gpr_library(d, p, store, GprVariant::kFull);
  for (int g = 0; g < 4; ++g)
    for (int k = 0; k < 17; ++k)
      for (int c = 0; c < 2; ++c) {
        double lo = 1e9, hi = -1e9;
        for (int j : p.skeleton().neighborhood(k)) {
          const double f = d.features[static_cast<std::size_t>((g * 17 + j) * 2 + c)];
          lo = std::min(lo, f), hi = std::max(hi, f);
        }
        const double v = out[static_cast<std::size_t>((g * 17 + k) * 2 + c)];
        EXPECT_GE(v, lo - 1e-12);
        EXPECT_LE(v, hi + 1e-12);
      }
}

TEST(GprForward, OwnHeatAndGatingProperties) {
  Rng rng(7);
  ParameterStore store;
  const GprParams p = GprParams::create(store, Skeleton::chain(3), 3, rng);
  randomize_transforms(p, store, rng);
  GraphData d = testing::random_graphs(1, 3, 3, rng, 1.0);
  std::fill(d.reliable.begin(), d.reliable.end(), 1);
  const auto base = testing::gpr_library(d, p, store, GprVariant::kFull);

  // Node 1's own heat does not change g_1.
  GraphData own = d;
  own.heat[1] *= 0.3;
  const auto own_out = testing::gpr_library(own, p, store, GprVariant::kFull);
  for (std::size_t c = 3; c < 6; ++c) EXPECT_NEAR(own_out[c], base[c], 1e-14);

  // Gating neighbour 0 equals dropping its term.
  GraphData gated = d;
  gated.reliable[0] = 0;
  GraphData dropped = d;
  dropped.heat[0] = 0.0;
  EXPECT_EQ(testing::gpr_library(gated, p, store, GprVariant::kFull),
            testing::gpr_library(dropped, p, store, GprVariant::kFull));

  // Struct-agnostic output ignores every other node.
  GraphData other = d;
  for (std::size_t i = 0; i < 3; ++i) other.features[i] += 5.0;
  const auto a = testing::gpr_library(d, p, store, GprVariant::kStructAgnostic);
  const auto b = testing::gpr_library(other, p, store, GprVariant::kStructAgnostic);
  for (std::size_t i = 3; i < 9; ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(GprForward, GradientsOn17NodeGraphs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParameterStore store;
    const GprParams p = GprParams::create(store, Skeleton::coco17(), 3, rng);
    randomize_transforms(p, store, rng);
    const GraphData d = testing::random_graphs(2, 17, 3, rng);
    const auto fi = store.add("features", Tensor(Shape{2, 17, 3}, d.features));
    // Heat kept off the clamp kinks.
    Tensor heat(Shape{2, 17}, d.heat);
    for (double& h : heat.values()) h = 0.05 + 0.9 * h;
    const auto hi = store.add("heat", heat);
    GradCheckOptions opts;
    opts.seed = seed;
    opts.max_elements_per_param = 6;
    for (GprVariant v : {GprVariant::kFull, GprVariant::kVb}) {
      const GradCheckResult r = grad_check(
          store,
          [&](Tape& tape) {
            GraphBatch b{2, tape.param(store[fi]), tape.param(store[hi]), d.reliable, d.active};
            return testing::project(gpr_forward(b, p, store, v), seed);
          },
          opts);
      EXPECT_TRUE(r.passed) << seed << " " << to_string(v) << " " << r.max_rel_error;
    }
  }
}

TEST(Head, ZeroWeightsGiveZeroOutputs) {
  Rng rng(8);
  ParameterStore store;
  const GprParams p = GprParams::create(store, Skeleton::chain(2), 4, rng);
  for (const LinearIndex* l : {&p.fc1, &p.fc2, &p.cls, &p.reg}) {
    store[l->weight].value.fill(0.0);
    store[l->bias].value.fill(0.0);
  }
  for (const BatchNormIndex* b : {&p.bn1, &p.bn2}) store[b->beta].value.fill(0.0);
  Tape tape;
  const HeadOutput h =
      head_forward(tape.constant(testing::random_tensor({5, 4}, rng)), p, store, Phase::kEval, false);
  for (double v : h.logits.value().values()) EXPECT_EQ(v, 0.0);
  for (double v : h.offsets.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Head, EvalDeterministicAndGradients) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParameterStore store;
    const GprParams p = GprParams::create(store, Skeleton::chain(2), 3, rng);
    testing::offset_head_biases(p, store, rng);
    const Tensor x = testing::random_tensor({6, 3}, rng);
    Tape t1, t2;
    EXPECT_EQ(head_forward(t1.constant(x), p, store, Phase::kEval, false).logits.value(),
              head_forward(t2.constant(x), p, store, Phase::kEval, false).logits.value());
    const auto xi = store.add("x", x);
    GradCheckOptions opts;
    opts.seed = seed;
    for (Phase phase : {Phase::kTrain, Phase::kEval}) {
      const GradCheckResult r = grad_check(
          store,
          [&](Tape& tape) {
            const HeadOutput h = head_forward(tape.param(store[xi]), p, store, phase, false);
            const Var parts[] = {reshape(h.logits, Shape{12}), reshape(h.offsets, Shape{12})};
            return testing::project(concat_rows(parts), seed);
          },
          opts);
      EXPECT_TRUE(r.passed) << seed << " " << r.max_rel_error;
    }
  }
}

TEST(Refine, AddAndClamp) {
  const RefinedPoint a = refine_coordinate({10, 12}, {0.3, -0.4}, {64, 48});
  EXPECT_NEAR(a.position.x, 10.3, 1e-15);
  EXPECT_NEAR(a.position.y, 11.6, 1e-15);
  EXPECT_FALSE(a.clamped);
  EXPECT_EQ(refine_coordinate({10, 12}, {0, 0}, {64, 48}).position, (Point2{10, 12}));
  const RefinedPoint c = refine_coordinate({0.1, 0.1}, {-1, -1}, {64, 48});
  EXPECT_EQ(c.position, (Point2{0, 0}));
  EXPECT_TRUE(c.clamped);
}

}  // namespace
}  // namespace gpcnn
