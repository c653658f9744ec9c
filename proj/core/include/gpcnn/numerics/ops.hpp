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

#ifndef GPCNN_NUMERICS_OPS_HPP_
#define GPCNN_NUMERICS_OPS_HPP_

#include <span>
#include <vector>

#include "gpcnn/numerics/tape.hpp"
#include "gpcnn/numerics/tensor.hpp"
#include "gpcnn/types.hpp"

namespace gpcnn {

// Differentiable operations. Every op validates shapes (ErrorCode::kDimension)
// and rejects non-finite inputs (ErrorCode::kNonFinite).

/// [m, k] x [k, n] -> [m, n].
Var matmul(const Var& a, const Var& b);

/// Adds `bias` [n] to every row of the last axis of `x` [..., n].
Var add_bias(const Var& x, const Var& bias);

Var add(const Var& a, const Var& b);
Var scale(const Var& x, double factor);

/// Same-padded 2-D cross-correlation: input [H, W, Cin], kernel
/// [kh, kw, Cin, Cout] with odd kh, kw -> [H, W, Cout]. No bias.
Var conv2d(const Var& input, const Var& kernel);

/// conv2d evaluated only at the listed output pixels (row-major y * W + x);
/// every other output pixel is zero.
Var conv2d(const Var& input, const Var& kernel, std::span<const std::size_t> pixels);

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Batch normalization over the rows of x [B, C]. Train phase normalizes by
/// the (biased) batch statistics and, when `update_running` is set, moves the
/// running statistics by kBatchNormMomentum using the unbiased batch
/// variance. Eval phase uses the running statistics.
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
              Tensor& running_var, Phase phase, bool update_running = true);

Var relu(const Var& x);

/// Clamps elementwise to [lo, hi]; gradient passes only strictly inside.
Var clamp(const Var& x, double lo, double hi);

/// Per-row weighted cross-entropy of softmax(logits[b]) against class
/// targets[b]: weights[b] * -log p_b[target]. Returns [B].
Var softmax_xent(const Var& logits, std::span<const int> targets,
                 std::span<const double> weights);

/// Per-row L1 distance sum_j |pred[b, j] - target[b, j]|. Returns [B].
/// Subgradient at ties is zero.
Var l1_loss(const Var& pred, const Tensor& target);

/// Sum of all elements -> [1].
Var sum(const Var& x);

/// sum_i weights[i] * x[i] over all elements -> [1].
Var weighted_sum(const Var& x, std::span<const double> weights);

/// sum_i coeffs[i] * terms[i] for single-element terms -> [1].
Var linear_combination(std::span<const Var> terms, std::span<const double> coeffs);

/// Rows [begin, begin + count) along the first axis.
Var slice_rows(const Var& x, std::size_t begin, std::size_t count);

/// Concatenates along the first axis; trailing extents must agree.
Var concat_rows(std::span<const Var> parts);

Var reshape(const Var& x, Shape shape);

/// Rows of x [R, ...] at `rows`, in that order (repeats allowed).
Var gather_rows(const Var& x, std::span<const std::size_t> rows);

/// out[i] = x[i, columns[i]] for x [P, D] -> [P].
Var pick_columns(const Var& x, std::span<const std::size_t> columns);

}  // namespace gpcnn

#endif  // GPCNN_NUMERICS_OPS_HPP_
