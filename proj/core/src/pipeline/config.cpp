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

#include "gpcnn/pipeline/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "gpcnn/error.hpp"

namespace gpcnn {
namespace {

using nlohmann::json;

const char* to_string(Stage1Scale s) {
  return s == Stage1Scale::kPixelSum ? "pixel_sum" : "pixel_mean";
}

Stage1Scale parse_scale(const std::string& name) {
  if (name == "pixel_sum") return Stage1Scale::kPixelSum;
  if (name == "pixel_mean") return Stage1Scale::kPixelMean;
  fail(ErrorCode::kConfig, "stage1_scale must be 'pixel_sum' or 'pixel_mean', got '" + name + "'");
}

template <typename T>
void read(const json& doc, const char* key, T& field) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    field = it->get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("field '") + key + "': " + e.what());
  }
}

void check(bool ok, const char* field, const std::string& why) {
  GPCNN_REQUIRE(ok, ErrorCode::kConfig, std::string(field) + ": " + why);
}

}  // namespace

Skeleton RunConfig::skeleton() const {
  if (!skeleton_edges.empty()) return Skeleton(num_keypoints, skeleton_edges);
  if (num_keypoints == 17) return Skeleton::coco17();
  return Skeleton::chain(num_keypoints);
}

double RunConfig::stage1_weight() const noexcept {
  return stage1_scale == Stage1Scale::kPixelSum ? static_cast<double>(grid_width) * grid_height
                                                : 1.0;
}

void RunConfig::validate() const {
  check(num_keypoints >= 1, "num_keypoints", "must be positive");
  check(grid_width >= 4 && grid_height >= 4, "grid", "must be at least 4x4");
  check(input_channels == 3, "input_channels", "synthetic inputs have exactly 3 channels");
  check(channels >= 1, "channels", "must be positive");
  check(sigma > 0.0, "sigma", "must be positive");
  check(guided_points >= 3 && guided_points % 3 == 0, "guided_points",
        "must be a positive multiple of 3");
  check(regression_weight >= 0.0, "regression_weight", "must be non-negative");
  check(delta_factor > 0.0, "delta_factor", "must be positive");
  check(xi >= 0.0 && xi <= 1.0, "xi", "must lie in [0, 1]");
  check(epochs >= 0, "epochs", "must be non-negative");
  check(batch_size >= 1, "batch_size", "must be positive");
  check(learning_rate > 0.0, "learning_rate", "must be positive");
  check(occlusion_rate >= 0.0 && occlusion_rate <= 1.0, "occlusion_rate", "must lie in [0, 1]");
  check(ignore_rate >= 0.0 && ignore_rate < 1.0, "ignore_rate", "must lie in [0, 1)");
  check(train_samples >= 1, "train_samples", "must be positive");
  check(heldout_samples >= 1, "heldout_samples", "must be positive");
  check(oks_kappa > 0.0, "oks_kappa", "must be positive");
  (void)skeleton();
}

json RunConfig::to_json() const {
  json edges = json::array();
  for (const auto& [a, b] : skeleton_edges) edges.push_back({a, b});
  return {{"num_keypoints", num_keypoints},
          {"grid_width", grid_width},
          {"grid_height", grid_height},
          {"input_channels", input_channels},
          {"channels", channels},
          {"sigma", sigma},
          {"guided_points", guided_points},
          {"regression_weight", regression_weight},
          {"delta_factor", delta_factor},
          {"xi", xi},
          {"variant", std::string(gpcnn::to_string(variant))},
          {"skeleton_edges", edges},
          {"seed", seed},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"occlusion_rate", occlusion_rate},
          {"ignore_rate", ignore_rate},
          {"train_samples", train_samples},
          {"heldout_samples", heldout_samples},
          {"stage1_scale", to_string(stage1_scale)},
          {"oks_kappa", oks_kappa}};
}

RunConfig RunConfig::from_json(const json& doc) {
  GPCNN_REQUIRE(doc.is_object(), ErrorCode::kConfig, "config must be a JSON object");
  RunConfig c;
  const std::set<std::string> known = [&] {
    std::set<std::string> keys;
    const json defaults = c.to_json();
    for (const auto& [k, v] : defaults.items()) keys.insert(k);
    return keys;
  }();
  for (const auto& [k, v] : doc.items()) {
    GPCNN_REQUIRE(known.count(k) != 0, ErrorCode::kConfig, "unknown config field '" + k + "'");
  }
  read(doc, "num_keypoints", c.num_keypoints);
  read(doc, "grid_width", c.grid_width);
  read(doc, "grid_height", c.grid_height);
  read(doc, "input_channels", c.input_channels);
  read(doc, "channels", c.channels);
  read(doc, "sigma", c.sigma);
  read(doc, "guided_points", c.guided_points);
  read(doc, "regression_weight", c.regression_weight);
  read(doc, "delta_factor", c.delta_factor);
  read(doc, "xi", c.xi);
  read(doc, "seed", c.seed);
  read(doc, "epochs", c.epochs);
  read(doc, "batch_size", c.batch_size);
  read(doc, "learning_rate", c.learning_rate);
  read(doc, "occlusion_rate", c.occlusion_rate);
  read(doc, "ignore_rate", c.ignore_rate);
  read(doc, "train_samples", c.train_samples);
  read(doc, "heldout_samples", c.heldout_samples);
  read(doc, "oks_kappa", c.oks_kappa);
  if (doc.contains("variant")) {
    std::string name;
    read(doc, "variant", name);
    c.variant = parse_variant(name);
  }
  if (doc.contains("stage1_scale")) {
    std::string name;
    read(doc, "stage1_scale", name);
    c.stage1_scale = parse_scale(name);
  }
  if (doc.contains("skeleton_edges")) {
    std::vector<std::vector<int>> edges;
    read(doc, "skeleton_edges", edges);
    for (const auto& e : edges) {
      GPCNN_REQUIRE(e.size() == 2, ErrorCode::kConfig, "skeleton_edges entries must be [a, b] pairs");
      c.skeleton_edges.emplace_back(e[0], e[1]);
    }
  }
  c.validate();
  return c;
}

std::string RunConfig::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig tiny_config() {
  RunConfig c;
  c.num_keypoints = 3;
  c.grid_width = 16;
  c.grid_height = 12;
  c.channels = 8;
  c.guided_points = 6;
  c.batch_size = 2;
  c.epochs = 1;
  c.train_samples = 8;
  c.heldout_samples = 4;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  GPCNN_REQUIRE(in.good(), ErrorCode::kIo, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return RunConfig::from_json(doc);
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  GPCNN_REQUIRE(out.good(), ErrorCode::kIo, "cannot write config " + path.string());
  out << config.to_json().dump(2) << '\n';
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  return Rng(seq);
}

}  // namespace gpcnn
