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

#include "gpcnn/numerics/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "gpcnn/error.hpp"

namespace gpcnn {

std::size_t element_count(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
  GPCNN_REQUIRE(values_.size() == element_count(shape_), ErrorCode::kDimension,
          "value count " + std::to_string(values_.size()) + " does not match shape " +
              to_string(shape_));
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(std::move(shape), std::vector<double>(values)) {}

std::size_t Tensor::dim(std::size_t axis) const {
  GPCNN_REQUIRE(axis < shape_.size(), ErrorCode::kDimension,
          "axis " + std::to_string(axis) + " out of range for " + to_string(shape_));
  return shape_[axis];
}

double Tensor::item() const {
  GPCNN_REQUIRE(values_.size() == 1, ErrorCode::kDimension,
          "item() on tensor of shape " + to_string(shape_));
  return values_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(Shape shape) const {
  GPCNN_REQUIRE(element_count(shape) == values_.size(), ErrorCode::kDimension,
          "cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

void Tensor::fill(double value) noexcept {
  for (double& v : values_) v = value;
}

void require_finite(const Tensor& t, std::string_view where) {
  if (!t.all_finite()) {
    fail(ErrorCode::kNonFinite, "non-finite value in " + std::string(where));
  }
}

void require_shape(const Tensor& t, const Shape& shape, std::string_view where) {
  if (t.shape() != shape) {
    fail(ErrorCode::kDimension, std::string(where) + ": expected " + to_string(shape) +
                                    ", got " + to_string(t.shape()));
  }
}

}  // namespace gpcnn
