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

#ifndef GPCNN_TYPES_HPP_
#define GPCNN_TYPES_HPP_

#include <cstdint>
#include <random>

namespace gpcnn {

// Continuous position in heatmap pixel units: x is the column, y the row.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }

double distance(Point2 a, Point2 b) noexcept;
double squared_distance(Point2 a, Point2 b) noexcept;

struct GridSize {
  int width = 0;
  int height = 0;

  friend bool operator==(const GridSize&, const GridSize&) = default;
};

enum class Phase { kTrain, kEval };

// All randomness in the library flows through this engine type.
using Rng = std::mt19937_64;

}  // namespace gpcnn

#endif  // GPCNN_TYPES_HPP_
