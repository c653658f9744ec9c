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

#include "gpcnn/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "gpcnn/error.hpp"

namespace gpcnn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

Tape& same_tape(const Var& a, const Var& b) {
  GPCNN_REQUIRE(&a.tape() == &b.tape(), ErrorCode::kDimension, "operands recorded on different tapes");
  return a.tape();
}

Tensor checked(Tensor t, const char* op) {
  require_finite(t, op);
  return t;
}

void accumulate(Tensor& dst, const Tensor& src) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < s.size(); ++i) d[i] += s[i];
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  GPCNN_REQUIRE(t.rank() == rank, ErrorCode::kDimension,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
              to_string(t.shape()));
}

// Unfolds the same-padded [H, W, Cin] neighbourhoods of the listed output
// pixels into [P, kh*kw*Cin] patches whose column order matches a row-major
// [kh, kw, Cin, Cout] kernel.
RowMatrix im2col(const Tensor& input, std::size_t kh, std::size_t kw,
                 std::span<const std::size_t> pixels) {
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
  RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(pixels.size()),
                                   static_cast<Eigen::Index>(kh * kw * cin));
  const double* in = input.data();
  for (std::size_t r = 0; r < pixels.size(); ++r) {
    const std::size_t y = pixels[r] / w, x = pixels[r] % w;
    double* row = cols.data() + r * kh * kw * cin;
    for (std::size_t dy = 0; dy < kh; ++dy) {
      const long sy = static_cast<long>(y + dy) - ph;
      if (sy < 0 || sy >= static_cast<long>(h)) continue;
      for (std::size_t dx = 0; dx < kw; ++dx) {
        const long sx = static_cast<long>(x + dx) - pw;
        if (sx < 0 || sx >= static_cast<long>(w)) continue;
        const double* src = in + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * cin;
        std::copy(src, src + cin, row + (dy * kw + dx) * cin);
      }
    }
  }
  return cols;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "matmul");
  require_rank(bv, 2, "matmul");
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  GPCNN_REQUIRE(bv.dim(0) == k, ErrorCode::kDimension,
          "matmul: inner dimensions disagree " + to_string(av.shape()) + " x " +
              to_string(bv.shape()));
  Tensor out(Shape{m, n});
  MatrixMap(out.data(), m, n).noalias() =
      ConstMatrixMap(av.data(), m, k) * ConstMatrixMap(bv.data(), k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(
      checked(std::move(out), "matmul"),
      [ia, ib, m, k, n](Tape& t, std::size_t self) {
        ConstMatrixMap dout(t.grad(self).data(), m, n);
        if (t.requires_grad(ia)) {
          MatrixMap(t.grad(ia).data(), m, k).noalias() +=
              dout * ConstMatrixMap(t.value(ib).data(), k, n).transpose();
        }
        if (t.requires_grad(ib)) {
          MatrixMap(t.grad(ib).data(), k, n).noalias() +=
              ConstMatrixMap(t.value(ia).data(), m, k).transpose() * dout;
        }
      },
      tape.requires_grad(a) || tape.requires_grad(b));
}

Var add_bias(const Var& x, const Var& bias) {
  Tape& tape = same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  GPCNN_REQUIRE(xv.rank() >= 1 && bv.rank() == 1 && bv.dim(0) == xv.shape().back(),
          ErrorCode::kDimension,
          "add_bias: " + to_string(bv.shape()) + " does not match last axis of " +
              to_string(xv.shape()));
  const std::size_t n = bv.size();
  Tensor out = xv;
  for (std::size_t base = 0; base < out.size(); base += n) {
    for (std::size_t j = 0; j < n; ++j) out[base + j] += bv[j];
  }
  const std::size_t ix = x.id(), ib = bias.id();
  return tape.record(
      checked(std::move(out), "add_bias"),
      [ix, ib, n](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ix)) accumulate(t.grad(ix), g);
        if (t.requires_grad(ib)) {
          Tensor& gb = t.grad(ib);
          for (std::size_t base = 0; base < g.size(); base += n) {
            for (std::size_t j = 0; j < n; ++j) gb[j] += g[base + j];
          }
        }
      },
      tape.requires_grad(x) || tape.requires_grad(bias));
}

Var add(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  GPCNN_REQUIRE(a.value().same_shape(b.value()), ErrorCode::kDimension,
          "add: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor out = a.value();
  accumulate(out, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(
      checked(std::move(out), "add"),
      [ia, ib](Tape& t, std::size_t self) {
        if (t.requires_grad(ia)) accumulate(t.grad(ia), t.grad(self));
        if (t.requires_grad(ib)) accumulate(t.grad(ib), t.grad(self));
      },
      tape.requires_grad(a) || tape.requires_grad(b));
}

Var scale(const Var& x, double factor) {
  Tape& tape = x.tape();
  Tensor out = x.value();
  for (double& v : out.values()) v *= factor;
  const std::size_t ix = x.id();
  return tape.record(
      checked(std::move(out), "scale"),
      [ix, factor](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
      },
      tape.requires_grad(x));
}

namespace {

Var conv2d_impl(const Var& input, const Var& kernel, std::vector<std::size_t> pixels, bool dense) {
  Tape& tape = same_tape(input, kernel);
  const Tensor& in = input.value();
  const Tensor& ker = kernel.value();
  require_rank(in, 3, "conv2d input");
  require_rank(ker, 4, "conv2d kernel");
  const std::size_t h = in.dim(0), w = in.dim(1), cin = in.dim(2);
  const std::size_t kh = ker.dim(0), kw = ker.dim(1), cout = ker.dim(3);
  GPCNN_REQUIRE(kh % 2 == 1 && kw % 2 == 1, ErrorCode::kDimension,
                "conv2d: kernel extents must be odd, got " + to_string(ker.shape()));
  GPCNN_REQUIRE(ker.dim(2) == cin, ErrorCode::kDimension,
                "conv2d: channel mismatch, input " + to_string(in.shape()) + " kernel " +
                    to_string(ker.shape()));
  require_finite(in, "conv2d input");
  const std::size_t pixels_total = h * w, patch = kh * kw * cin;
  if (dense) {
    pixels.resize(pixels_total);
    for (std::size_t p = 0; p < pixels_total; ++p) pixels[p] = p;
  }
  for (std::size_t p : pixels) {
    GPCNN_REQUIRE(p < pixels_total, ErrorCode::kIndexOutOfRange,
                  "conv2d: pixel " + std::to_string(p) + " outside " + to_string(in.shape()));
  }

  RowMatrix cols = im2col(in, kh, kw, pixels);
  Tensor out(Shape{h, w, cout});
  const auto n = static_cast<Eigen::Index>(pixels.size());
  if (dense) {
    MatrixMap(out.data(), n, cout).noalias() = cols * ConstMatrixMap(ker.data(), patch, cout);
  } else {
    const RowMatrix rows = cols * ConstMatrixMap(ker.data(), patch, cout);
    for (Eigen::Index r = 0; r < n; ++r) {
      std::copy_n(rows.data() + r * static_cast<Eigen::Index>(cout), cout,
                  out.data() + pixels[static_cast<std::size_t>(r)] * cout);
    }
  }

  const std::size_t ii = input.id(), ik = kernel.id();
  return tape.record(
      checked(std::move(out), "conv2d"),
      [ii, ik, h, w, cin, kh, kw, cout, patch, pixels = std::move(pixels), cols = std::move(cols)](
          Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        // Downstream sampling touches few pixels; only rows with a nonzero
        // output gradient contribute.
        std::vector<Eigen::Index> live;  // indices into `pixels`
        live.reserve(pixels.size());
        for (std::size_t r = 0; r < pixels.size(); ++r) {
          const double* row = g.data() + pixels[r] * cout;
          if (std::any_of(row, row + cout, [](double v) { return v != 0.0; })) {
            live.push_back(static_cast<Eigen::Index>(r));
          }
        }
        if (live.empty()) return;
        const auto n_live = static_cast<Eigen::Index>(live.size());
        const bool all_live = live.size() == pixels.size();
        RowMatrix dout(n_live, static_cast<Eigen::Index>(cout));
        for (Eigen::Index r = 0; r < n_live; ++r) {
          std::copy_n(g.data() + pixels[static_cast<std::size_t>(live[r])] * cout, cout,
                      dout.data() + r * static_cast<Eigen::Index>(cout));
        }
        ConstMatrixMap kmat(t.value(ik).data(), patch, cout);
        if (t.requires_grad(ik)) {
          MatrixMap dk(t.grad(ik).data(), patch, cout);
          if (all_live) {
            dk.noalias() += cols.transpose() * dout;
          } else {
            RowMatrix live_cols(n_live, static_cast<Eigen::Index>(patch));
            for (Eigen::Index r = 0; r < n_live; ++r) live_cols.row(r) = cols.row(live[r]);
            dk.noalias() += live_cols.transpose() * dout;
          }
        }
        if (t.requires_grad(ii)) {
          const RowMatrix dcols = dout * kmat.transpose();
          Tensor& gi = t.grad(ii);
          const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
          for (Eigen::Index r = 0; r < n_live; ++r) {
            const std::size_t p = pixels[static_cast<std::size_t>(live[r])];
            const std::size_t y = p / w, x = p % w;
            const double* row = dcols.data() + r * static_cast<Eigen::Index>(patch);
            for (std::size_t dy = 0; dy < kh; ++dy) {
              const long sy = static_cast<long>(y + dy) - ph;
              if (sy < 0 || sy >= static_cast<long>(h)) continue;
              for (std::size_t dx = 0; dx < kw; ++dx) {
                const long sx = static_cast<long>(x + dx) - pw;
                if (sx < 0 || sx >= static_cast<long>(w)) continue;
                double* dst = gi.data() + (static_cast<std::size_t>(sy) * w +
                                           static_cast<std::size_t>(sx)) * cin;
                const double* src = row + (dy * kw + dx) * cin;
                for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
              }
            }
          }
        }
      },
      tape.requires_grad(input) || tape.requires_grad(kernel));
}

}  // namespace

Var conv2d(const Var& input, const Var& kernel) { return conv2d_impl(input, kernel, {}, true); }

Var conv2d(const Var& input, const Var& kernel, std::span<const std::size_t> pixels) {
  return conv2d_impl(input, kernel, std::vector<std::size_t>(pixels.begin(), pixels.end()), false);
}

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
              Tensor& running_var, Phase phase, bool update_running) {
  Tape& tape = same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& xv = x.value();
  require_rank(xv, 2, "batchnorm");
  const std::size_t b = xv.dim(0), c = xv.dim(1);
  require_shape(gamma.value(), Shape{c}, "batchnorm gamma");
  require_shape(beta.value(), Shape{c}, "batchnorm beta");
  require_shape(running_mean, Shape{c}, "batchnorm running mean");
  require_shape(running_var, Shape{c}, "batchnorm running var");
  require_finite(xv, "batchnorm input");

  Tensor mean(Shape{c});
  Tensor inv_std(Shape{c});
  if (phase == Phase::kTrain) {
    GPCNN_REQUIRE(b >= 2, ErrorCode::kDegenerateBatch,
            "batchnorm in train phase needs at least 2 rows, got " + std::to_string(b));
    Tensor var(Shape{c});
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < c; ++j) mean[j] += xv.at(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) mean[j] /= static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        const double d = xv.at(i, j) - mean[j];
        var[j] += d * d;
      }
    }
    for (std::size_t j = 0; j < c; ++j) {
      const double biased = var[j] / static_cast<double>(b);
      inv_std[j] = 1.0 / std::sqrt(biased + kBatchNormEpsilon);
      if (update_running) {
        const double unbiased = var[j] / static_cast<double>(b - 1);
        running_mean[j] = (1.0 - kBatchNormMomentum) * running_mean[j] + kBatchNormMomentum * mean[j];
        running_var[j] = (1.0 - kBatchNormMomentum) * running_var[j] + kBatchNormMomentum * unbiased;
      }
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      mean[j] = running_mean[j];
      inv_std[j] = 1.0 / std::sqrt(running_var[j] + kBatchNormEpsilon);
    }
  }

  Tensor xhat(Shape{b, c});
  Tensor out(Shape{b, c});
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double n = (xv.at(i, j) - mean[j]) * inv_std[j];
      xhat.at(i, j) = n;
      out.at(i, j) = gv[j] * n + bv[j];
    }
  }

  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  const bool batch_stats = phase == Phase::kTrain;
  return tape.record(
      checked(std::move(out), "batchnorm"),
      [ix, ig, ib, b, c, batch_stats, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& gv = t.value(ig);
        std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
        for (std::size_t i = 0; i < b; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            sum_g[j] += g.at(i, j);
            sum_gx[j] += g.at(i, j) * xhat.at(i, j);
          }
        }
        if (t.requires_grad(ig)) {
          Tensor& gg = t.grad(ig);
          for (std::size_t j = 0; j < c; ++j) gg[j] += sum_gx[j];
        }
        if (t.requires_grad(ib)) {
          Tensor& gb = t.grad(ib);
          for (std::size_t j = 0; j < c; ++j) gb[j] += sum_g[j];
        }
        if (!t.requires_grad(ix)) return;
        Tensor& gx = t.grad(ix);
        const double inv_b = 1.0 / static_cast<double>(b);
        for (std::size_t i = 0; i < b; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            const double scale = gv[j] * inv_std[j];
            if (batch_stats) {
              gx.at(i, j) += scale * (g.at(i, j) - inv_b * sum_g[j] -
                                      inv_b * xhat.at(i, j) * sum_gx[j]);
            } else {
              gx.at(i, j) += scale * g.at(i, j);
            }
          }
        }
      },
      tape.requires_grad(x) || tape.requires_grad(gamma) || tape.requires_grad(beta));
}

Var relu(const Var& x) {
  Tape& tape = x.tape();
  require_finite(x.value(), "relu input");
  Tensor out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  const std::size_t ix = x.id();
  return tape.record(
      std::move(out),
      [ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& xv = t.value(ix);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (xv[i] > 0.0) gx[i] += g[i];
        }
      },
      tape.requires_grad(x));
}

Var clamp(const Var& x, double lo, double hi) {
  Tape& tape = x.tape();
  require_finite(x.value(), "clamp input");
  Tensor out = x.value();
  for (double& v : out.values()) v = std::clamp(v, lo, hi);
  const std::size_t ix = x.id();
  return tape.record(
      std::move(out),
      [ix, lo, hi](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& xv = t.value(ix);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (xv[i] > lo && xv[i] < hi) gx[i] += g[i];
        }
      },
      tape.requires_grad(x));
}

Var softmax_xent(const Var& logits, std::span<const int> targets,
                 std::span<const double> weights) {
  Tape& tape = logits.tape();
  const Tensor& z = logits.value();
  require_rank(z, 2, "softmax_xent");
  const std::size_t b = z.dim(0), m = z.dim(1);
  GPCNN_REQUIRE(targets.size() == b && weights.size() == b, ErrorCode::kDimension,
          "softmax_xent: need one target and weight per row");
  require_finite(z, "softmax_xent logits");

  Tensor probs(Shape{b, m});
  Tensor out(Shape{b});
  for (std::size_t i = 0; i < b; ++i) {
    const int target = targets[i];
    GPCNN_REQUIRE(target >= 0 && static_cast<std::size_t>(target) < m, ErrorCode::kIndexOutOfRange,
            "softmax_xent: target class " + std::to_string(target) + " out of range");
    GPCNN_REQUIRE(weights[i] >= 0.0, ErrorCode::kDimension, "softmax_xent: negative weight");
    std::size_t arg = 0;
    for (std::size_t j = 1; j < m; ++j) {
      if (z.at(i, j) > z.at(i, arg)) arg = j;
    }
    const double zmax = z.at(i, arg);
    double rest = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double e = std::exp(z.at(i, j) - zmax);
      probs.at(i, j) = e;
      if (j != arg) rest += e;
    }
    const double log_norm = std::log1p(rest);
    for (std::size_t j = 0; j < m; ++j) probs.at(i, j) /= 1.0 + rest;
    out[i] = weights[i] * (zmax + log_norm - z.at(i, static_cast<std::size_t>(target)));
  }

  const std::size_t iz = logits.id();
  std::vector<int> t_copy(targets.begin(), targets.end());
  std::vector<double> w_copy(weights.begin(), weights.end());
  return tape.record(
      checked(std::move(out), "softmax_xent"),
      [iz, b, m, probs = std::move(probs), t_copy = std::move(t_copy),
       w_copy = std::move(w_copy)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gz = t.grad(iz);
        for (std::size_t i = 0; i < b; ++i) {
          const double s = g[i] * w_copy[i];
          if (s == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) {
            const double onehot = static_cast<int>(j) == t_copy[i] ? 1.0 : 0.0;
            gz.at(i, j) += s * (probs.at(i, j) - onehot);
          }
        }
      },
      tape.requires_grad(logits));
}

Var l1_loss(const Var& pred, const Tensor& target) {
  Tape& tape = pred.tape();
  const Tensor& p = pred.value();
  require_rank(p, 2, "l1_loss");
  GPCNN_REQUIRE(p.same_shape(target), ErrorCode::kDimension,
          "l1_loss: " + to_string(p.shape()) + " vs " + to_string(target.shape()));
  require_finite(target, "l1_loss target");
  const std::size_t b = p.dim(0), m = p.dim(1);
  Tensor out(Shape{b});
  Tensor sign(Shape{b, m});
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = p.at(i, j) - target.at(i, j);
      out[i] += std::abs(d);
      sign.at(i, j) = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    }
  }
  const std::size_t ip = pred.id();
  return tape.record(
      checked(std::move(out), "l1_loss"),
      [ip, b, m, sign = std::move(sign)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gp = t.grad(ip);
        for (std::size_t i = 0; i < b; ++i) {
          for (std::size_t j = 0; j < m; ++j) gp.at(i, j) += g[i] * sign.at(i, j);
        }
      },
      tape.requires_grad(pred));
}

Var sum(const Var& x) {
  Tape& tape = x.tape();
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const std::size_t ix = x.id();
  return tape.record(
      checked(Tensor::scalar(total), "sum"),
      [ix](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        for (double& v : t.grad(ix).values()) v += g;
      },
      tape.requires_grad(x));
}

Var weighted_sum(const Var& x, std::span<const double> weights) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  GPCNN_REQUIRE(weights.size() == xv.size(), ErrorCode::kDimension,
          "weighted_sum: " + std::to_string(weights.size()) + " weights for " +
              std::to_string(xv.size()) + " elements");
  double total = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) total += weights[i] * xv[i];
  const std::size_t ix = x.id();
  std::vector<double> w(weights.begin(), weights.end());
  return tape.record(
      checked(Tensor::scalar(total), "weighted_sum"),
      [ix, w = std::move(w)](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < w.size(); ++i) gx[i] += g * w[i];
      },
      tape.requires_grad(x));
}

Var linear_combination(std::span<const Var> terms, std::span<const double> coeffs) {
  GPCNN_REQUIRE(!terms.empty() && terms.size() == coeffs.size(), ErrorCode::kDimension,
          "linear_combination: need one coefficient per term");
  Tape& tape = terms.front().tape();
  double total = 0.0;
  bool needs_grad = false;
  std::vector<std::size_t> ids;
  ids.reserve(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    same_tape(terms.front(), terms[i]);
    total += coeffs[i] * terms[i].value().item();
    needs_grad = needs_grad || tape.requires_grad(terms[i]);
    ids.push_back(terms[i].id());
  }
  std::vector<double> c(coeffs.begin(), coeffs.end());
  return tape.record(
      checked(Tensor::scalar(total), "linear_combination"),
      [ids = std::move(ids), c = std::move(c)](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (t.requires_grad(ids[i])) t.grad(ids[i])[0] += g * c[i];
        }
      },
      needs_grad);
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t count) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  GPCNN_REQUIRE(xv.rank() >= 1 && begin + count <= xv.dim(0), ErrorCode::kIndexOutOfRange,
          "slice_rows: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") out of " + to_string(xv.shape()));
  Shape shape = xv.shape();
  shape[0] = count;
  const std::size_t row = xv.size() / xv.dim(0);
  std::vector<double> values(xv.data() + begin * row, xv.data() + (begin + count) * row);
  const std::size_t ix = x.id();
  return tape.record(
      Tensor(std::move(shape), std::move(values)),
      [ix, offset = begin * row](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[offset + i] += g[i];
      },
      tape.requires_grad(x));
}

Var concat_rows(std::span<const Var> parts) {
  GPCNN_REQUIRE(!parts.empty(), ErrorCode::kEmptyInput, "concat_rows: no parts");
  Tape& tape = parts.front().tape();
  const Shape& first = parts.front().shape();
  GPCNN_REQUIRE(!first.empty(), ErrorCode::kDimension, "concat_rows: rank-0 part");
  Shape shape = first;
  shape[0] = 0;
  bool needs_grad = false;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    const Shape& s = p.shape();
    GPCNN_REQUIRE(s.size() == first.size() && std::equal(s.begin() + 1, s.end(), first.begin() + 1),
            ErrorCode::kDimension,
            "concat_rows: " + to_string(s) + " incompatible with " + to_string(first));
    shape[0] += s[0];
    needs_grad = needs_grad || tape.requires_grad(p);
  }
  std::vector<double> values;
  values.reserve(element_count(shape));
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (id, size)
  for (const Var& p : parts) {
    const auto v = p.value().values();
    values.insert(values.end(), v.begin(), v.end());
    spans.emplace_back(p.id(), v.size());
  }
  return tape.record(
      Tensor(std::move(shape), std::move(values)),
      [spans = std::move(spans)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (const auto& [id, n] : spans) {
          if (t.requires_grad(id)) {
            Tensor& gp = t.grad(id);
            for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
          }
          offset += n;
        }
      },
      needs_grad);
}

Var reshape(const Var& x, Shape shape) {
  Tape& tape = x.tape();
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  return tape.record(
      std::move(out),
      [ix](Tape& t, std::size_t self) { accumulate(t.grad(ix), t.grad(self)); },
      tape.requires_grad(x));
}

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  GPCNN_REQUIRE(xv.rank() >= 1, ErrorCode::kDimension, "gather_rows: rank-0 input");
  const std::size_t row = xv.dim(0) == 0 ? 0 : xv.size() / xv.dim(0);
  Shape shape = xv.shape();
  shape[0] = rows.size();
  std::vector<double> values;
  values.reserve(rows.size() * row);
  for (std::size_t r : rows) {
    GPCNN_REQUIRE(r < xv.dim(0), ErrorCode::kIndexOutOfRange,
            "gather_rows: row " + std::to_string(r) + " of " + to_string(xv.shape()));
    values.insert(values.end(), xv.data() + r * row, xv.data() + (r + 1) * row);
  }
  const std::size_t ix = x.id();
  return tape.record(
      Tensor(std::move(shape), std::move(values)),
      [ix, row, rows = std::vector<std::size_t>(rows.begin(), rows.end())](Tape& t,
                                                                            std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          for (std::size_t j = 0; j < row; ++j) gx[rows[i] * row + j] += g[i * row + j];
        }
      },
      tape.requires_grad(x));
}

Var pick_columns(const Var& x, std::span<const std::size_t> columns) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  require_rank(xv, 2, "pick_columns");
  GPCNN_REQUIRE(columns.size() == xv.dim(0), ErrorCode::kDimension,
          "pick_columns: " + std::to_string(columns.size()) + " columns for " +
              to_string(xv.shape()));
  const std::size_t d = xv.dim(1);
  Tensor out(Shape{columns.size()});
  for (std::size_t i = 0; i < columns.size(); ++i) {
    GPCNN_REQUIRE(columns[i] < d, ErrorCode::kIndexOutOfRange,
            "pick_columns: column " + std::to_string(columns[i]) + " of " + to_string(xv.shape()));
    out[i] = xv[i * d + columns[i]];
  }
  const std::size_t ix = x.id();
  return tape.record(
      std::move(out),
      [ix, d, cols = std::vector<std::size_t>(columns.begin(), columns.end())](Tape& t,
                                                                               std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < cols.size(); ++i) gx[i * d + cols[i]] += g[i];
      },
      tape.requires_grad(x));
}

}  // namespace gpcnn
