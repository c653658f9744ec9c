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

#include "gpcnn/numerics/adam.hpp"

#include <cmath>

#include "gpcnn/error.hpp"

namespace gpcnn {

void adam_step(ParameterStore& params, const AdamConfig& config) {
  for (const auto& p : params) {
    if (p.trainable && !p.grad.all_finite()) {
      fail(ErrorCode::kNonFinite, "gradient of parameter '" + p.name + "' is not finite");
    }
  }
  for (auto& p : params) {
    if (!p.trainable) continue;
    GPCNN_REQUIRE(p.grad.same_shape(p.value), ErrorCode::kDimension,
            "gradient shape mismatch for '" + p.name + "'");
    ++p.step;
    const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(p.step));
    const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(p.step));
    auto value = p.value.values();
    auto grad = p.grad.values();
    auto m = p.first_moment.values();
    auto v = p.second_moment.values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace gpcnn
