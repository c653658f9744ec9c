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

#ifndef GPCNN_NUMERICS_GRAD_CHECK_HPP_
#define GPCNN_NUMERICS_GRAD_CHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gpcnn/numerics/tape.hpp"

namespace gpcnn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // 0 checks every element; otherwise a seeded random subset per parameter.
  std::size_t max_elements_per_param = 0;
  std::uint64_t seed = 0;
};

struct ParameterGradError {
  std::string name;
  std::size_t worst_index = 0;
  double max_rel_error = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<ParameterGradError> per_parameter;
  bool passed = true;

  const ParameterGradError* worst() const;
};

/// Builds a scalar loss on the tape from parameters registered via
/// Tape::param. Must be deterministic.
using LossFragment = std::function<Var(Tape&)>;

/// Compares the tape gradient with central differences for every trainable
/// parameter in `params`. Relative error is
/// |g_a - g_n| / max(1, |g_a|, |g_n|).
GradCheckResult grad_check(ParameterStore& params, const LossFragment& fragment,
                           const GradCheckOptions& options = {});

/// As grad_check, but throws ErrorCode::kCheckFailure listing the offending
/// parameters when the tolerance is exceeded.
GradCheckResult require_gradients(ParameterStore& params, const LossFragment& fragment,
                                  const GradCheckOptions& options = {});

}  // namespace gpcnn

#endif  // GPCNN_NUMERICS_GRAD_CHECK_HPP_
