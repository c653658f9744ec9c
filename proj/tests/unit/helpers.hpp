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


#ifndef GPCNN_TESTS_UNIT_HELPERS_HPP_
#define GPCNN_TESTS_UNIT_HELPERS_HPP_

#include <functional>
#include <random>
#include <vector>

#include "gpcnn/numerics/grad_check.hpp"
#include "gpcnn/numerics/ops.hpp"
#include "gpcnn/numerics/tape.hpp"

namespace gpcnn::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

// Reduces an op output to a scalar with fixed random weights so every output
// element gets a distinct upstream gradient.
inline Var project(const Var& out, std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> w(out.value().size());
  for (double& v : w) v = dist(rng);
  return weighted_sum(out, w);
}

using OpBuilder = std::function<Var(Tape&, std::vector<Var>&)>;

// Registers `inputs` as parameters and finite-difference checks d(project(op))/d(inputs).
inline GradCheckResult check_op(std::vector<Tensor> inputs, const OpBuilder& op, std::uint64_t seed,
                                double tolerance = 1e-4) {
  ParameterStore store;
  for (std::size_t i = 0; i < inputs.size(); ++i) store.add("in" + std::to_string(i), std::move(inputs[i]));
  GradCheckOptions opts;
  opts.tolerance = tolerance;
  opts.seed = seed;
  return grad_check(
      store,
      [&](Tape& tape) {
        std::vector<Var> vars;
        for (auto& p : store) vars.push_back(tape.param(p));
        return project(op(tape, vars), seed);
      },
      opts);
}

}  // namespace gpcnn::testing

#endif  // GPCNN_TESTS_UNIT_HELPERS_HPP_
