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

#ifndef GPCNN_NUMERICS_TAPE_HPP_
#define GPCNN_NUMERICS_TAPE_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gpcnn/numerics/tensor.hpp"

namespace gpcnn {

/// Learnable (or buffered) tensor with its Adam state.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
  std::int64_t step = 0;
  // Buffers such as batch-norm running statistics are stored alongside the
  // parameters (so checkpoints cover them) but never updated by the optimizer.
  bool trainable = true;
};

/// Ordered, name-unique collection of parameters. Declaration order is the
/// checkpoint payload order.
class ParameterStore {
 public:
  std::size_t add(std::string name, Tensor init, bool trainable = true);

  Parameter& operator[](std::size_t index) { return params_.at(index); }
  const Parameter& operator[](std::size_t index) const { return params_.at(index); }

  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  const Parameter* find(std::string_view name) const noexcept;
  Parameter* find(std::string_view name) noexcept;

  std::size_t size() const noexcept { return params_.size(); }
  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

  void zero_grad();
  std::size_t trainable_element_count() const noexcept;

 private:
  std::vector<Parameter> params_;
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
/// is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Gradient accumulated by Tape::backward (zeros if the node was unreached).
  Tensor grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recorder. Nodes are appended in evaluation order, so walking
/// them backwards is a valid topological order for the backward pass.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; backward adds into `param.grad`.
  Var param(Parameter& param);
  /// Records an op result. `backward` reads grad(self) and accumulates into
  /// the grads of its inputs. Pass requires_grad=false when no input does.
  Var record(Tensor value, Backward backward, bool requires_grad);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  /// Gradient buffer for a node, allocated as zeros on first access.
  Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  /// Seeds d(root)/d(root) = 1 and propagates. Root must hold one element.
  void backward(const Var& root);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  // deque: references to recorded values stay valid while more nodes are appended.
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace gpcnn

#endif  // GPCNN_NUMERICS_TAPE_HPP_
