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

#include "gpcnn/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gpcnn/error.hpp"
#include "gpcnn/types.hpp"

namespace gpcnn {
namespace {

double evaluate(const LossFragment& fragment) {
  Tape tape;
  return fragment(tape).value().item();
}

std::vector<std::size_t> pick_elements(std::size_t n, const GradCheckOptions& options, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (options.max_elements_per_param == 0 || n <= options.max_elements_per_param) return all;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(options.max_elements_per_param);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

const ParameterGradError* GradCheckResult::worst() const {
  if (per_parameter.empty()) return nullptr;
  return &*std::max_element(per_parameter.begin(), per_parameter.end(),
                            [](const auto& a, const auto& b) { return a.max_rel_error < b.max_rel_error; });
}

GradCheckResult grad_check(ParameterStore& params, const LossFragment& fragment,
                           const GradCheckOptions& options) {
  params.zero_grad();
  {
    Tape tape;
    Var loss = fragment(tape);
    tape.backward(loss);
  }

  GradCheckResult result;
  Rng rng(options.seed);
  for (auto& p : params) {
    if (!p.trainable) continue;
    ParameterGradError err;
    err.name = p.name;
    bool first = true;
    for (std::size_t i : pick_elements(p.value.size(), options, rng)) {
      const double original = p.value[i];
      p.value[i] = original + options.step;
      const double plus = evaluate(fragment);
      p.value[i] = original - options.step;
      const double minus = evaluate(fragment);
      p.value[i] = original;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = p.grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      if (first || rel > err.max_rel_error) {
        first = false;
        err.max_rel_error = rel;
        err.worst_index = i;
        err.analytic = analytic;
        err.numeric = numeric;
      }
    }
    result.max_rel_error = std::max(result.max_rel_error, err.max_rel_error);
    result.per_parameter.push_back(std::move(err));
  }
  result.passed = result.max_rel_error < options.tolerance;
  return result;
}

GradCheckResult require_gradients(ParameterStore& params, const LossFragment& fragment,
                                  const GradCheckOptions& options) {
  GradCheckResult result = grad_check(params, fragment, options);
  if (!result.passed) {
    std::ostringstream os;
    os << "gradient check failed (tolerance " << options.tolerance << "):";
    for (const auto& e : result.per_parameter) {
      if (e.max_rel_error < options.tolerance) continue;
      os << ' ' << e.name << "[" << e.worst_index << "] rel=" << e.max_rel_error
         << " analytic=" << e.analytic << " numeric=" << e.numeric << ';';
    }
    fail(ErrorCode::kCheckFailure, os.str());
  }
  return result;
}

}  // namespace gpcnn
