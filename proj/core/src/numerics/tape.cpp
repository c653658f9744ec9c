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

#include "gpcnn/numerics/tape.hpp"

#include <utility>

#include "gpcnn/error.hpp"

namespace gpcnn {

std::size_t ParameterStore::add(std::string name, Tensor init, bool trainable) {
  GPCNN_REQUIRE(find(name) == nullptr, ErrorCode::kConfig, "duplicate parameter name '" + name + "'");
  Parameter p;
  p.name = std::move(name);
  p.grad = Tensor(init.shape());
  p.first_moment = Tensor(init.shape());
  p.second_moment = Tensor(init.shape());
  p.value = std::move(init);
  p.trainable = trainable;
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

const Parameter* ParameterStore::find(std::string_view name) const noexcept {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Parameter* ParameterStore::find(std::string_view name) noexcept {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Parameter& ParameterStore::get(std::string_view name) {
  Parameter* p = find(name);
  GPCNN_REQUIRE(p != nullptr, ErrorCode::kConfig, "unknown parameter '" + std::string(name) + "'");
  return *p;
}

const Parameter& ParameterStore::get(std::string_view name) const {
  const Parameter* p = find(name);
  GPCNN_REQUIRE(p != nullptr, ErrorCode::kConfig, "unknown parameter '" + std::string(name) + "'");
  return *p;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParameterStore::trainable_element_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable) n += p.value.size();
  }
  return n;
}

Tensor Var::grad() const {
  if (tape_->has_grad(id_)) return tape_->grad(id_);
  return Tensor(value().shape());
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& param) {
  nodes_.push_back(Node{param.value, {}, {}, &param, param.trainable});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, Backward backward, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), {}, requires_grad ? std::move(backward) : Backward{},
                        nullptr, requires_grad});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(const Var& root) {
  GPCNN_REQUIRE(root.tape_ == this, ErrorCode::kDimension, "backward root belongs to another tape");
  GPCNN_REQUIRE(value(root.id()).size() == 1, ErrorCode::kDimension,
          "backward root must be a single element, got " + to_string(value(root.id()).shape()));
  grad(root.id())[0] += 1.0;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      auto dst = n.param->grad.values();
      auto src = n.grad.values();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    }
  }
}

}  // namespace gpcnn
