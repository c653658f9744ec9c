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
#include <filesystem>
#include <fstream>

#include "gpcnn/error.hpp"
#include "gpcnn/pipeline/config.hpp"
#include "gpcnn/pipeline/synth.hpp"

namespace gpcnn {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gpcnn_unit";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Config, Defaults) {
  const RunConfig c;
  EXPECT_EQ(c.num_keypoints, 17);
  EXPECT_EQ(c.grid_width, 64);
  EXPECT_EQ(c.grid_height, 48);
  EXPECT_EQ(c.channels, 32);
  EXPECT_EQ(c.sigma, 2.0);
  EXPECT_EQ(c.guided_points, 48);
  EXPECT_EQ(c.regression_weight, 16.0);
  EXPECT_EQ(c.delta_factor, 2.0);
  EXPECT_EQ(c.xi, 0.85);
  EXPECT_EQ(c.epochs, 30);
  EXPECT_EQ(c.learning_rate, 1e-3);
  EXPECT_EQ(c.variant, GprVariant::kFull);
  EXPECT_EQ(c.train_samples, 2000);
  EXPECT_EQ(c.heldout_samples, 500);
  EXPECT_EQ(c.skeleton().edges().size(), 19u);
  EXPECT_NO_THROW(c.validate());
  const RunConfig t = tiny_config();
  EXPECT_EQ(t.num_keypoints, 3);
  EXPECT_EQ(t.grid(), (GridSize{16, 12}));
  EXPECT_EQ(t.channels, 8);
}

TEST(Config, JsonRoundTripAndHash) {
  RunConfig c = tiny_config();
  c.variant = GprVariant::kVb;
  c.skeleton_edges = {{0, 1}, {1, 2}, {0, 2}};
  c.seed = 99;
  const RunConfig back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  RunConfig other = c;
  other.seed = 100;
  EXPECT_NE(other.hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 16u);
}

TEST(Config, PartialDocumentKeepsDefaults) {
  const RunConfig c = RunConfig::from_json(nlohmann::json{{"epochs", 3}, {"variant", "va"}});
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.variant, GprVariant::kVa);
  EXPECT_EQ(c.xi, 0.85);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  auto code = [](const nlohmann::json& doc) {
    try {
      RunConfig::from_json(doc).validate();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code({{"epoch", 3}}), ErrorCode::kConfig);
  EXPECT_EQ(code({{"guided_points", 10}}), ErrorCode::kConfig);
  EXPECT_EQ(code({{"sigma", -1.0}}), ErrorCode::kConfig);
  EXPECT_EQ(code({{"variant", "bogus"}}), ErrorCode::kConfig);
  EXPECT_EQ(code({{"epochs", "three"}}), ErrorCode::kConfig);
  EXPECT_EQ(code({{"num_keypoints", 4}, {"skeleton_edges", {{0, 1}, {2, 3}}}}), ErrorCode::kConfig);
}

TEST(Config, FileRoundTrip) {
  const fs::path p = temp_path("config.json");
  save_config(tiny_config(), p);
  EXPECT_EQ(load_config(p).to_json(), tiny_config().to_json());
  {
    std::ofstream bad(p);
    bad << "{ not json";
  }
  EXPECT_THROW(load_config(p), Error);
  EXPECT_THROW(load_config(temp_path("missing.json")), Error);
}

TEST(Rng, StreamsAreIndependentAndReproducible) {
  Rng a = make_rng(5, streams::kInit), b = make_rng(5, streams::kInit), c = make_rng(5, streams::kSampling);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
}

TEST(Synth, DeterministicAndInBounds) {
  const Skeleton s = Skeleton::coco17();
  const Dataset a = synth_generate(20, s, {64, 48}, 0.3, 11);
  const Dataset b = synth_generate(20, s, {64, 48}, 0.3, 11);
  ASSERT_EQ(a.samples.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(a.samples[i].input, b.samples[i].input);
    EXPECT_EQ(a.samples[i].keypoints.coords, b.samples[i].keypoints.coords);
    EXPECT_EQ(a.samples[i].occluded, b.samples[i].occluded);
    for (std::size_t k = 0; k < 17; ++k) {
      const Point2 t = a.samples[i].keypoints.coords[k];
      EXPECT_GE(t.x, 0.0);
      EXPECT_LE(t.x, 63.0);
      EXPECT_GE(t.y, 0.0);
      EXPECT_LE(t.y, 47.0);
    }
    // Regenerating one sample from its own seed gives the same sample.
    const SynthSample one = synth_sample(s, {64, 48}, 0.3, 0.05, a.samples[i].seed);
    EXPECT_EQ(one.input, a.samples[i].input);
  }
}

TEST(Synth, IdentityBlobPeaksNearKeypoints) {
  // Project channels 1-2 onto each keypoint's identity direction; around an
  // isolated keypoint the local maximum must sit within one pixel of t.
  const Skeleton s = Skeleton::coco17();
  const Dataset d = synth_generate(20, s, {64, 48}, 0.0, 3);
  for (const SynthSample& smp : d.samples) {
    for (int k = 0; k < 17; ++k) {
      const Point2 t = smp.keypoints.coords[static_cast<std::size_t>(k)];
      bool isolated = true;
      for (const Point2& o : smp.keypoints.coords)
        if (o != t && distance(o, t) < 4.0 * kBlobSigma) isolated = false;
      if (!isolated) continue;
      const double a = identity_angle(k, 17);
      double best = -1e9;
      Point2 at;
      for (int y = static_cast<int>(t.y) - 2; y <= static_cast<int>(t.y) + 3; ++y)
        for (int x = static_cast<int>(t.x) - 2; x <= static_cast<int>(t.x) + 3; ++x) {
          if (x < 0 || y < 0 || x >= 64 || y >= 48) continue;
          const double v = std::cos(a) * smp.input.at(y, x, 1) + std::sin(a) * smp.input.at(y, x, 2);
          if (v > best) best = v, at = {static_cast<double>(x), static_cast<double>(y)};
        }
      EXPECT_LE(std::max(std::abs(at.x - t.x), std::abs(at.y - t.y)), 1.0) << k;
    }
  }
}

TEST(Synth, OcclusionErasesBlobButKeepsWeight) {
  const Dataset d = synth_generate(30, Skeleton::coco17(), {64, 48}, 1.0, 4, 0.0);
  for (const SynthSample& smp : d.samples) {
    for (std::size_t k = 0; k < 17; ++k) {
      EXPECT_EQ(smp.occluded[k], 1);
      EXPECT_EQ(smp.keypoints.weights[k], 1.0);
    }
    for (std::size_t i = 0; i < smp.input.size(); i += 3) {
      EXPECT_LE(std::abs(smp.input[i + 1]), kSynthNoise);
      EXPECT_LE(std::abs(smp.input[i + 2]), kSynthNoise);
    }
  }
}

TEST(Synth, IdentityAnglesDistinct) {
  for (int k = 0; k < 17; ++k)
    for (int j = k + 1; j < 17; ++j) EXPECT_GT(std::abs(identity_angle(k, 17) - identity_angle(j, 17)), 1e-6);
}

TEST(Synth, DatasetFileRoundTrip) {
  const Dataset d = synth_generate(3, Skeleton::chain(3), {16, 12}, 0.2, 8);
  const fs::path p = temp_path("ds.gpds");
  save_dataset(d, p);
  const Dataset back = load_dataset(p);
  ASSERT_EQ(back.samples.size(), 3u);
  EXPECT_EQ(back.grid, d.grid);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.samples[i].input, d.samples[i].input);
    EXPECT_EQ(back.samples[i].keypoints.coords, d.samples[i].keypoints.coords);
    EXPECT_EQ(back.samples[i].keypoints.weights, d.samples[i].keypoints.weights);
    EXPECT_EQ(back.samples[i].seed, d.samples[i].seed);
  }
  const auto size = fs::file_size(p);
  fs::resize_file(p, size - 9);
  try {
    load_dataset(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorruptCheckpoint);
  }
}

}  // namespace
}  // namespace gpcnn
