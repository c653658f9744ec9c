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

#include "gpcnn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "gpcnn/error.hpp"
#include "gpcnn/numerics/ops.hpp"

namespace gpcnn {

double squared_distance(Point2 a, Point2 b) noexcept {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double distance(Point2 a, Point2 b) noexcept { return std::sqrt(squared_distance(a, b)); }

std::size_t KeypointSet::visible_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
}

Heatmap::Heatmap(Tensor scores, double sigma) : scores_(std::move(scores)), sigma_(sigma) {
  GPCNN_REQUIRE(scores_.rank() == 3, ErrorCode::kDimension, "heatmap must be [H, W, K]");
  GPCNN_REQUIRE(scores_.dim(0) >= 4 && scores_.dim(1) >= 4, ErrorCode::kDimension,
          "heatmap grid must be at least 4x4, got " + to_string(scores_.shape()));
  GPCNN_REQUIRE(sigma_ > 0.0, ErrorCode::kConfig, "heatmap sigma must be positive");
}

GridSize Heatmap::grid() const noexcept {
  return {static_cast<int>(scores_.shape()[1]), static_cast<int>(scores_.shape()[0])};
}

Tensor Heatmap::channel(int k) const { return extract_channel(scores_, k); }

FeatureMap::FeatureMap(Tensor features) : features_(std::move(features)) {
  GPCNN_REQUIRE(features_.rank() == 3, ErrorCode::kDimension, "feature map must be [H, W, C]");
}

GridSize FeatureMap::grid() const noexcept {
  return {static_cast<int>(features_.shape()[1]), static_cast<int>(features_.shape()[0])};
}

GaussianTarget gaussian_target(Point2 center, double sigma, GridSize grid) {
  GPCNN_REQUIRE(sigma > 0.0, ErrorCode::kConfig, "gaussian_target: sigma must be positive");
  GPCNN_REQUIRE(grid.width > 0 && grid.height > 0, ErrorCode::kDimension, "gaussian_target: empty grid");
  GaussianTarget target;
  target.channel = Tensor(Shape{static_cast<std::size_t>(grid.height),
                                static_cast<std::size_t>(grid.width)});
  if (!(center.x >= 0.0 && center.x <= grid.width - 1 && center.y >= 0.0 &&
        center.y <= grid.height - 1)) {
    target.outside = true;
    return target;
  }
  const double denom = 2.0 * sigma * sigma;
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const double v = std::exp(-squared_distance({double(x), double(y)}, center) / denom);
      target.channel.at(y, x) = v < kGaussianTruncation ? 0.0 : v;
    }
  }
  return target;
}

Tensor gaussian_targets(const KeypointSet& keypoints, double sigma, GridSize grid) {
  const std::size_t k_count = keypoints.size();
  Tensor out(Shape{static_cast<std::size_t>(grid.height), static_cast<std::size_t>(grid.width),
                   k_count});
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!keypoints.visible(k)) continue;
    const Tensor channel = gaussian_target(keypoints.coords[k], sigma, grid).channel;
    for (std::size_t p = 0; p < channel.size(); ++p) out[p * k_count + k] = channel[p];
  }
  return out;
}

Tensor extract_channel(const Tensor& maps, int k) {
  GPCNN_REQUIRE(maps.rank() == 3, ErrorCode::kDimension, "extract_channel: expected [H, W, K]");
  const std::size_t channels = maps.dim(2);
  GPCNN_REQUIRE(k >= 0 && static_cast<std::size_t>(k) < channels, ErrorCode::kIndexOutOfRange,
          "extract_channel: channel " + std::to_string(k) + " of " + std::to_string(channels));
  Tensor out(Shape{maps.dim(0), maps.dim(1)});
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = maps[p * channels + static_cast<std::size_t>(k)];
  return out;
}

DecodedPeak decode_heatmap(const Tensor& channel) {
  GPCNN_REQUIRE(channel.rank() == 2 && !channel.empty(), ErrorCode::kDimension,
          "decode_heatmap: expected non-empty [H, W]");
  const int h = static_cast<int>(channel.dim(0));
  const int w = static_cast<int>(channel.dim(1));
  const auto values = channel.values();
  const auto best = std::max_element(values.begin(), values.end());  // first maximum
  const auto lowest = std::min_element(values.begin(), values.end());

  DecodedPeak out;
  out.peak = *best;
  if (*best == *lowest) {
    out.position = {(w - 1) / 2.0, (h - 1) / 2.0};
    out.degenerate = true;
    return out;
  }
  const int index = static_cast<int>(best - values.begin());
  const int px = index % w, py = index / w;
  out.position = {static_cast<double>(px), static_cast<double>(py)};
  if (px > 0 && px < w - 1) {
    const double right = channel.at(py, px + 1), left = channel.at(py, px - 1);
    if (right > left) out.position.x += 0.25;
    if (left > right) out.position.x -= 0.25;
  }
  if (py > 0 && py < h - 1) {
    const double below = channel.at(py + 1, px), above = channel.at(py - 1, px);
    if (below > above) out.position.y += 0.25;
    if (above > below) out.position.y -= 0.25;
  }
  return out;
}

namespace {

struct Corners {
  std::size_t x0, x1, y0, y1;
  double ax, ay;
  bool clamped;
};

Corners locate(std::size_t h, std::size_t w, Point2 s) {
  Corners c{};
  const double max_x = static_cast<double>(w - 1), max_y = static_cast<double>(h - 1);
  const double x = std::clamp(s.x, 0.0, max_x);
  const double y = std::clamp(s.y, 0.0, max_y);
  c.clamped = x != s.x || y != s.y;
  c.x0 = w >= 2 ? std::min(static_cast<std::size_t>(std::floor(x)), w - 2) : 0;
  c.y0 = h >= 2 ? std::min(static_cast<std::size_t>(std::floor(y)), h - 2) : 0;
  c.x1 = std::min(c.x0 + 1, w - 1);
  c.y1 = std::min(c.y0 + 1, h - 1);
  c.ax = x - static_cast<double>(c.x0);
  c.ay = y - static_cast<double>(c.y0);
  return c;
}

}  // namespace

BilinearSample bilinear_sample(const Tensor& map, Point2 position) {
  GPCNN_REQUIRE((map.rank() == 2 || map.rank() == 3) && !map.empty(), ErrorCode::kDimension,
          "bilinear_sample: expected [H, W] or [H, W, D]");
  GPCNN_REQUIRE(std::isfinite(position.x) && std::isfinite(position.y), ErrorCode::kNonFinite,
          "bilinear_sample: non-finite position");
  const std::size_t h = map.dim(0), w = map.dim(1);
  const std::size_t d = map.rank() == 3 ? map.dim(2) : 1;
  const Corners c = locate(h, w, position);
  const double w00 = (1 - c.ax) * (1 - c.ay), w01 = c.ax * (1 - c.ay);
  const double w10 = (1 - c.ax) * c.ay, w11 = c.ax * c.ay;
  BilinearSample out;
  out.clamped = c.clamped;
  out.values.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    out.values[j] = w00 * map[(c.y0 * w + c.x0) * d + j] + w01 * map[(c.y0 * w + c.x1) * d + j] +
                    w10 * map[(c.y1 * w + c.x0) * d + j] + w11 * map[(c.y1 * w + c.x1) * d + j];
  }
  return out;
}

Var sample_points(const Var& map, std::span<const Point2> points) {
  Tape& tape = map.tape();
  const Tensor& m = map.value();
  GPCNN_REQUIRE(m.rank() == 3, ErrorCode::kDimension, "sample_points: expected [H, W, D]");
  const std::size_t h = m.dim(0), w = m.dim(1), d = m.dim(2);

  struct Tap {
    std::size_t offset[4];
    double weight[4];
  };
  std::vector<Tap> taps;
  taps.reserve(points.size());
  Tensor out(Shape{points.size(), d});
  for (std::size_t i = 0; i < points.size(); ++i) {
    GPCNN_REQUIRE(std::isfinite(points[i].x) && std::isfinite(points[i].y), ErrorCode::kNonFinite,
            "sample_points: non-finite position");
    const Corners c = locate(h, w, points[i]);
    Tap tap{{(c.y0 * w + c.x0) * d, (c.y0 * w + c.x1) * d, (c.y1 * w + c.x0) * d,
             (c.y1 * w + c.x1) * d},
            {(1 - c.ax) * (1 - c.ay), c.ax * (1 - c.ay), (1 - c.ax) * c.ay, c.ax * c.ay}};
    double* row = out.data() + i * d;
    for (int q = 0; q < 4; ++q) {
      const double* src = m.data() + tap.offset[q];
      for (std::size_t j = 0; j < d; ++j) row[j] += tap.weight[q] * src[j];
    }
    taps.push_back(tap);
  }
  const std::size_t im = map.id();
  return tape.record(
      std::move(out),
      [im, d, taps = std::move(taps)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gm = t.grad(im);
        for (std::size_t i = 0; i < taps.size(); ++i) {
          const double* row = g.data() + i * d;
          for (int q = 0; q < 4; ++q) {
            double* dst = gm.data() + taps[i].offset[q];
            for (std::size_t j = 0; j < d; ++j) dst[j] += taps[i].weight[q] * row[j];
          }
        }
      },
      tape.requires_grad(map));
}

std::vector<std::size_t> bilinear_support(GridSize grid, std::span<const Point2> points) {
  GPCNN_REQUIRE(grid.height > 0 && grid.width > 0, ErrorCode::kDimension,
                "bilinear_support: empty grid");
  const auto h = static_cast<std::size_t>(grid.height), w = static_cast<std::size_t>(grid.width);
  std::vector<std::size_t> out;
  out.reserve(points.size() * 4);
  for (const Point2& p : points) {
    GPCNN_REQUIRE(std::isfinite(p.x) && std::isfinite(p.y), ErrorCode::kNonFinite,
                  "bilinear_support: non-finite position");
    const Corners c = locate(h, w, p);
    out.insert(out.end(), {c.y0 * w + c.x0, c.y0 * w + c.x1, c.y1 * w + c.x0, c.y1 * w + c.x1});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double clamp_heat(double h) noexcept { return std::max(0.0, std::min(1.0, h)); }

Var clamp_heat(const Var& h) { return clamp(h, 0.0, 1.0); }

}  // namespace gpcnn
