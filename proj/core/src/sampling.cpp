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

#include "gpcnn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "gpcnn/error.hpp"

namespace gpcnn {
namespace {

constexpr int kMaxRejections = 10000;

GuidedPoint make_point(const Tensor& heat_channel, int keypoint, Point2 position, PointKind kind,
                       Point2 truth, double sigma) {
  GuidedPoint p;
  p.keypoint = keypoint;
  p.position = position;
  p.kind = kind;
  p.heat = clamp_heat(bilinear_sample(heat_channel, position).values[0]);
  p.label = is_positive(position, truth, sigma) ? PointLabel::kPositive : PointLabel::kNegative;
  return p;
}

bool inside(Point2 p, double max_x, double max_y) {
  return p.x >= 0.0 && p.x <= max_x && p.y >= 0.0 && p.y <= max_y;
}

}  // namespace

const char* to_string(PointKind kind) noexcept {
  switch (kind) {
    case PointKind::kNear: return "near";
    case PointKind::kFar: return "far";
    case PointKind::kTopResponse: return "top_response";
    case PointKind::kDecoded: return "decoded";
  }
  return "unknown";
}

bool is_positive(Point2 position, Point2 truth, double sigma) noexcept {
  return distance(position, truth) < kPositiveRadiusFactor * sigma;
}

KeypointSamples sample_guided_points(const Tensor& heat_channel, int keypoint, Point2 truth,
                                     double sigma, int count, Rng& rng) {
  GPCNN_REQUIRE(heat_channel.rank() == 2, ErrorCode::kDimension,
          "sample_guided_points: expected [H, W] heat channel");
  GPCNN_REQUIRE(count > 0 && count % 3 == 0, ErrorCode::kConfig,
          "guided point count must be a positive multiple of 3, got " + std::to_string(count));
  GPCNN_REQUIRE(sigma > 0.0, ErrorCode::kConfig, "sample_guided_points: sigma must be positive");
  const int h = static_cast<int>(heat_channel.dim(0));
  const int w = static_cast<int>(heat_channel.dim(1));
  const double max_x = w - 1, max_y = h - 1;
  const double radius = kPositiveRadiusFactor * sigma;

  // The disk misses the grid entirely when the nearest grid point is >= radius away.
  const Point2 nearest{std::clamp(truth.x, 0.0, max_x), std::clamp(truth.y, 0.0, max_y)};
  GPCNN_REQUIRE(std::isfinite(truth.x) && std::isfinite(truth.y) && distance(nearest, truth) < radius,
          ErrorCode::kInvalidKeypoint,
          "keypoint " + std::to_string(keypoint) + ": positive disk lies outside the grid");

  const int per_kind = count / 3;
  KeypointSamples out;
  out.keypoint = keypoint;
  out.points.reserve(static_cast<std::size_t>(count));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  for (int i = 0; i < per_kind; ++i) {
    Point2 p = truth;
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
      const double r = radius * std::sqrt(unit(rng));
      const double a = angle(rng);
      const Point2 cand{truth.x + r * std::cos(a), truth.y + r * std::sin(a)};
      if (distance(cand, truth) < radius && inside(cand, max_x, max_y)) {
        p = cand;
        break;
      }
      p = Point2{std::clamp(cand.x, 0.0, max_x), std::clamp(cand.y, 0.0, max_y)};
    }
    out.points.push_back(make_point(heat_channel, keypoint, p, PointKind::kNear, truth, sigma));
  }

  std::uniform_real_distribution<double> ux(0.0, max_x);
  std::uniform_real_distribution<double> uy(0.0, max_y);
  for (int i = 0; i < per_kind; ++i) {
    Point2 p;
    int attempt = 0;
    do {
      GPCNN_REQUIRE(attempt++ < kMaxRejections, ErrorCode::kInvalidKeypoint,
              "keypoint " + std::to_string(keypoint) + ": no grid area outside the positive disk");
      p = {ux(rng), uy(rng)};
    } while (distance(p, truth) < radius);
    out.points.push_back(make_point(heat_channel, keypoint, p, PointKind::kFar, truth, sigma));
  }

  // Top-response cells: stable order by descending score, row-major on ties.
  const std::size_t cells = heat_channel.size();
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(count), cells);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return heat_channel[a] > heat_channel[b] ||
                             (heat_channel[a] == heat_channel[b] && a < b);
                    });
  order.resize(top);
  out.with_replacement = top < static_cast<std::size_t>(per_kind);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  for (int i = 0; i < per_kind; ++i) {
    std::size_t cell;
    if (out.with_replacement) {
      cell = order[std::uniform_int_distribution<std::size_t>(0, top - 1)(rng)];
    } else {
      // Partial Fisher-Yates: positions [0, i) hold the cells already drawn.
      const std::size_t j = std::uniform_int_distribution<std::size_t>(
          static_cast<std::size_t>(i), top - 1)(rng);
      std::swap(order[static_cast<std::size_t>(i)], order[j]);
      cell = order[static_cast<std::size_t>(i)];
    }
    const double cx = static_cast<double>(cell % static_cast<std::size_t>(w));
    const double cy = static_cast<double>(cell / static_cast<std::size_t>(w));
    const Point2 p{std::clamp(cx + jitter(rng), 0.0, max_x), std::clamp(cy + jitter(rng), 0.0, max_y)};
    out.points.push_back(make_point(heat_channel, keypoint, p, PointKind::kTopResponse, truth, sigma));
  }

  for (const auto& p : out.points) {
    (p.label == PointLabel::kPositive ? out.positives : out.negatives) += 1;
  }
  return out;
}

bool compute_reliability(const GuidedPoint& point, Phase phase, std::optional<Point2> truth,
                         double sigma, const ReliabilityConfig& config) {
  if (phase == Phase::kTrain) {
    GPCNN_REQUIRE(truth.has_value(), ErrorCode::kMissingGroundTruth,
            "train-phase reliability needs the ground-truth keypoint");
    return distance(point.position, *truth) < config.delta_factor * sigma;
  }
  return point.heat > config.xi;
}

SampleBatch sample_batch(const Tensor& heatmaps, const KeypointSet& truth, double sigma, int count,
                         const ReliabilityConfig& reliability, Rng& rng) {
  GPCNN_REQUIRE(heatmaps.rank() == 3 && heatmaps.dim(2) == truth.size(), ErrorCode::kDimension,
          "sample_batch: heatmaps " + to_string(heatmaps.shape()) + " vs " +
              std::to_string(truth.size()) + " keypoints");
  SampleBatch batch;
  batch.count = count;
  batch.keypoints.resize(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    batch.keypoints[k].keypoint = static_cast<int>(k);
    if (!truth.visible(k)) continue;
    const Tensor channel = extract_channel(heatmaps, static_cast<int>(k));
    batch.keypoints[k] =
        sample_guided_points(channel, static_cast<int>(k), truth.coords[k], sigma, count, rng);
    for (auto& p : batch.keypoints[k].points) {
      p.reliable = compute_reliability(p, Phase::kTrain, truth.coords[k], sigma, reliability);
    }
  }
  return batch;
}

void shuffle_guided_points(SampleBatch& batch, Rng& rng) {
  for (auto& samples : batch.keypoints) {
    auto& pts = samples.points;
    for (std::size_t i = pts.size(); i > 1; --i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
      std::swap(pts[i - 1], pts[j]);
    }
  }
}

TestPoint select_test_point(const Tensor& heat_channel, int keypoint) {
  const DecodedPeak peak = decode_heatmap(heat_channel);
  TestPoint out;
  out.degenerate = peak.degenerate;
  out.point.keypoint = keypoint;
  out.point.position = peak.position;
  out.point.heat = clamp_heat(peak.peak);
  out.point.kind = PointKind::kDecoded;
  out.point.label = PointLabel::kUnset;
  return out;
}

}  // namespace gpcnn
