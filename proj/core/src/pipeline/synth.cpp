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

#include "gpcnn/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <set>

#include "container.hpp"
#include "gpcnn/error.hpp"

namespace gpcnn {
namespace {

constexpr char kDatasetMagic[] = "GPCNNDS\x01";
constexpr std::uint32_t kDatasetVersion = 1;

struct Limb {
  int parent;
  int child;
  double angle_deg;  // image coordinates, y pointing down
  double length;
};

// Upright person for the 17-keypoint skeleton, roughly 40 px tall.
constexpr Limb kPersonTemplate[] = {
    {0, 1, -150, 3.5}, {0, 2, -30, 3.5}, {1, 3, 180, 3.5}, {2, 4, 0, 3.5},
    {3, 5, 110, 6.0},  {4, 6, 70, 6.0},  {5, 7, 100, 7.5}, {6, 8, 80, 7.5},
    {7, 9, 95, 7.0},   {8, 10, 85, 7.0}, {5, 11, 90, 11.0}, {6, 12, 90, 11.0},
    {11, 13, 92, 8.5}, {12, 14, 88, 8.5}, {13, 15, 90, 8.5}, {14, 16, 90, 8.5},
};
constexpr double kJointJitterDeg = 25.0;

bool is_coco(const Skeleton& skeleton) {
  if (skeleton.num_keypoints() != 17) return false;
  auto normalize = [](const std::vector<Skeleton::Edge>& edges) {
    std::set<Skeleton::Edge> out;
    for (auto [a, b] : edges) out.emplace(std::min(a, b), std::max(a, b));
    return out;
  };
  return normalize(skeleton.edges()) == normalize(Skeleton::coco17().edges());
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Point2 polar(double angle_deg, double length) {
  const double th = angle_deg * std::numbers::pi / 180.0;
  return {length * std::cos(th), length * std::sin(th)};
}

std::vector<Point2> template_pose(Rng& rng) {
  std::vector<Point2> p(17);
  const double scale = uniform(rng, 0.8, 1.05);
  for (const Limb& limb : kPersonTemplate) {
    const double angle = limb.angle_deg + uniform(rng, -kJointJitterDeg, kJointJitterDeg);
    const double length = limb.length * scale * uniform(rng, 0.9, 1.1);
    p[static_cast<std::size_t>(limb.child)] = p[static_cast<std::size_t>(limb.parent)] + polar(angle, length);
  }
  return p;
}

// Breadth-first spanning tree from keypoint 0; each limb bends at most 60
// degrees from its parent limb.
std::vector<Point2> generic_pose(const Skeleton& skeleton, GridSize grid, Rng& rng) {
  const auto k_count = static_cast<std::size_t>(skeleton.num_keypoints());
  std::vector<Point2> p(k_count);
  std::vector<double> heading(k_count, 0.0);
  std::vector<char> seen(k_count, 0);
  const double base = 0.15 * std::min(grid.width, grid.height);
  std::queue<int> todo;
  todo.push(0);
  seen[0] = 1;
  while (!todo.empty()) {
    const int k = todo.front();
    todo.pop();
    const auto& nb = skeleton.neighborhood(k);
    for (std::size_t i = 1; i < nb.size(); ++i) {
      const auto j = static_cast<std::size_t>(nb[i]);
      if (seen[j]) continue;
      seen[j] = 1;
      const double angle = k == 0 ? uniform(rng, 0.0, 360.0)
                                  : heading[static_cast<std::size_t>(k)] + uniform(rng, -60.0, 60.0);
      heading[j] = angle;
      p[j] = p[static_cast<std::size_t>(k)] + polar(angle, base * uniform(rng, 0.8, 1.2));
      todo.push(nb[i]);
    }
  }
  return p;
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 1e-12 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, Point2{a.x + t * ab.x, a.y + t * ab.y});
}

}  // namespace

double identity_angle(int k, int num_keypoints) noexcept {
  // Stride 7 scatters adjacent joints around the circle when it is coprime
  // with K; otherwise fall back to the plain order.
  const int slot = std::gcd(7, num_keypoints) == 1 ? (7 * k) % num_keypoints : k;
  return 2.0 * std::numbers::pi * slot / num_keypoints;
}

std::vector<Point2> random_pose(const Skeleton& skeleton, GridSize grid, Rng& rng) {
  std::vector<Point2> p = is_coco(skeleton) ? template_pose(rng) : generic_pose(skeleton, grid, rng);
  Point2 lo = p.front(), hi = p.front();
  for (const Point2& q : p) {
    lo = {std::min(lo.x, q.x), std::min(lo.y, q.y)};
    hi = {std::max(hi.x, q.x), std::max(hi.y, q.y)};
  }
  // Shrink about the bbox corner if the pose cannot fit in [1, W-2] x [1, H-2].
  const double room_x = grid.width - 3.0, room_y = grid.height - 3.0;
  const double fit = std::min({1.0, room_x / std::max(hi.x - lo.x, 1e-9),
                               room_y / std::max(hi.y - lo.y, 1e-9)});
  for (Point2& q : p) q = Point2{lo.x + (q.x - lo.x) * fit, lo.y + (q.y - lo.y) * fit};
  hi = {lo.x + (hi.x - lo.x) * fit, lo.y + (hi.y - lo.y) * fit};
  const Point2 shift{uniform(rng, 1.0 - lo.x, std::max(1.0 - lo.x, grid.width - 2.0 - hi.x)),
                     uniform(rng, 1.0 - lo.y, std::max(1.0 - lo.y, grid.height - 2.0 - hi.y))};
  for (Point2& q : p) {
    q = q + shift;
    q.x = std::clamp(q.x, 1.0, grid.width - 2.0);
    q.y = std::clamp(q.y, 1.0, grid.height - 2.0);
  }
  return p;
}

SynthSample synth_sample(const Skeleton& skeleton, GridSize grid, double occlusion_rate,
                         double ignore_rate, std::uint64_t seed) {
  Rng rng(seed);
  const auto k_count = static_cast<std::size_t>(skeleton.num_keypoints());
  const auto h = static_cast<std::size_t>(grid.height), w = static_cast<std::size_t>(grid.width);
  SynthSample s;
  s.seed = seed;
  s.keypoints.coords = random_pose(skeleton, grid, rng);
  s.keypoints.weights.assign(k_count, 1.0);
  s.occluded.assign(k_count, 0);
  std::bernoulli_distribution occlude(occlusion_rate), ignore(ignore_rate);
  for (std::size_t k = 0; k < k_count; ++k) {
    s.occluded[k] = occlude(rng);
    if (ignore(rng)) s.keypoints.weights[k] = 0.0;
  }

  s.input = Tensor(Shape{h, w, 3});
  const auto& t = s.keypoints.coords;
  const double inv_two_var = 1.0 / (2.0 * kBlobSigma * kBlobSigma);
  std::uniform_real_distribution<double> noise(-kSynthNoise, kSynthNoise);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const Point2 p{static_cast<double>(x), static_cast<double>(y)};
      double d = std::numeric_limits<double>::infinity();
      for (auto [a, b] : skeleton.edges()) {
        d = std::min(d, segment_distance(p, t[static_cast<std::size_t>(a)], t[static_cast<std::size_t>(b)]));
      }
      double c = 0.0, sn = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) {
        if (s.occluded[k]) continue;
        const double g = std::exp(-squared_distance(p, t[k]) * inv_two_var);
        const double angle = identity_angle(static_cast<int>(k), static_cast<int>(k_count));
        c += std::cos(angle) * g;
        sn += std::sin(angle) * g;
      }
      double* px = &s.input.at(y, x, 0);
      px[0] = std::clamp(1.0 - d / 2.0, 0.0, 1.0);
      px[1] = c;
      px[2] = sn;
    }
  }
  for (std::size_t i = 0; i < h * w; ++i) {
    s.input[i * 3 + 1] += noise(rng);
    s.input[i * 3 + 2] += noise(rng);
  }
  return s;
}

Dataset synth_generate(int count, const Skeleton& skeleton, GridSize grid, double occlusion_rate,
                       std::uint64_t seed, double ignore_rate) {
  GPCNN_REQUIRE(count >= 1, ErrorCode::kConfig, "synth_generate: count must be positive");
  GPCNN_REQUIRE(grid.width >= 4 && grid.height >= 4, ErrorCode::kConfig, "synth_generate: grid too small");
  Dataset ds;
  ds.grid = grid;
  ds.num_keypoints = skeleton.num_keypoints();
  Rng seeds(seed);
  ds.samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ds.samples.push_back(synth_sample(skeleton, grid, occlusion_rate, ignore_rate, seeds()));
  }
  return ds;
}

Dataset train_dataset(const RunConfig& config) {
  return synth_generate(config.train_samples, config.skeleton(), config.grid(),
                        config.occlusion_rate, make_rng(config.seed, streams::kTrainData)(),
                        config.ignore_rate);
}

Dataset heldout_dataset(const RunConfig& config) {
  return synth_generate(config.heldout_samples, config.skeleton(), config.grid(),
                        config.occlusion_rate, make_rng(config.seed, streams::kHeldoutData)(),
                        config.ignore_rate);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  nlohmann::json samples = nlohmann::json::array();
  std::vector<double> payload;
  for (const auto& s : dataset.samples) {
    std::vector<double> coords;
    for (const Point2& p : s.keypoints.coords) {
      coords.push_back(p.x);
      coords.push_back(p.y);
    }
    samples.push_back({{"seed", s.seed},
                       {"coords", coords},
                       {"weights", s.keypoints.weights},
                       {"occluded", s.occluded}});
    const auto v = s.input.values();
    payload.insert(payload.end(), v.begin(), v.end());
  }
  const nlohmann::json manifest = {{"grid_width", dataset.grid.width},
                                   {"grid_height", dataset.grid.height},
                                   {"num_keypoints", dataset.num_keypoints},
                                   {"input_channels", 3},
                                   {"samples", samples}};
  container::write_file(path, container::encode({kDatasetMagic, 8}, kDatasetVersion, manifest, payload));
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto c = container::decode(container::read_file(path), {kDatasetMagic, 8}, kDatasetVersion);
  Dataset ds;
  try {
    ds.grid = {c.manifest.at("grid_width").get<int>(), c.manifest.at("grid_height").get<int>()};
    ds.num_keypoints = c.manifest.at("num_keypoints").get<int>();
    const auto h = static_cast<std::size_t>(ds.grid.height), w = static_cast<std::size_t>(ds.grid.width);
    const std::size_t per_sample = h * w * 3;
    const auto& samples = c.manifest.at("samples");
    GPCNN_REQUIRE(c.payload.size() == samples.size() * per_sample, ErrorCode::kCorruptCheckpoint,
            "dataset payload does not match its manifest");
    std::size_t offset = 0;
    for (const auto& js : samples) {
      SynthSample s;
      s.seed = js.at("seed").get<std::uint64_t>();
      const auto coords = js.at("coords").get<std::vector<double>>();
      for (std::size_t i = 0; i + 1 < coords.size(); i += 2) s.keypoints.coords.push_back({coords[i], coords[i + 1]});
      s.keypoints.weights = js.at("weights").get<std::vector<double>>();
      s.occluded = js.at("occluded").get<std::vector<std::uint8_t>>();
      GPCNN_REQUIRE(s.keypoints.coords.size() == static_cast<std::size_t>(ds.num_keypoints) &&
                  s.keypoints.weights.size() == s.keypoints.coords.size(),
              ErrorCode::kCorruptCheckpoint, "dataset sample keypoint count mismatch");
      s.input = Tensor(Shape{h, w, 3},
                       std::vector<double>(c.payload.begin() + static_cast<std::ptrdiff_t>(offset),
                                           c.payload.begin() + static_cast<std::ptrdiff_t>(offset + per_sample)));
      offset += per_sample;
      ds.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptCheckpoint, std::string("dataset manifest: ") + e.what());
  }
  return ds;
}

}  // namespace gpcnn
