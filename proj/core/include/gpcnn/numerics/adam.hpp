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

#ifndef GPCNN_NUMERICS_ADAM_HPP_
#define GPCNN_NUMERICS_ADAM_HPP_

#include "gpcnn/numerics/tape.hpp"

namespace gpcnn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of every trainable parameter from its
/// `grad`. Throws ErrorCode::kNonFinite naming the parameter if any gradient
/// is NaN or Inf; in that case no parameter is modified.
void adam_step(ParameterStore& params, const AdamConfig& config);

}  // namespace gpcnn

#endif  // GPCNN_NUMERICS_ADAM_HPP_
