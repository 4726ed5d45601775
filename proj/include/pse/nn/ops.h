// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Differentiable operations over Var. Feature maps are [C, T, F]
// (channels, frames, frequency bins); matrices are [rows, cols].

#pragma once

#include <array>
#include <vector>

#include "pse/nn/var.h"

namespace pse::nn {

// Elementwise, identical shapes.
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double s);
Var Sigmoid(const Var& x);

// Per-channel broadcast over a [C, ...] tensor with a [C] vector.
Var PRelu(const Var& x, const Var& slope);
Var MulChannel(const Var& x, const Var& gates);
Var AddChannel(const Var& x, const Var& v);

// Sum / mean of all elements; result has shape [1].
Var Sum(const Var& x);
Var Mean(const Var& x);

Var Reshape(const Var& x, Shape shape);
// Axis permutation of a rank-3 tensor: out.dim(i) == x.dim(perm[i]).
Var Permute3(const Var& x, std::array<int, 3> perm);
// Concatenation along axis 0.
Var Concat(const std::vector<Var>& xs);

Var MatMul(const Var& a, const Var& b);
// x[m, n] + b[n] on every row.
Var AddRowBias(const Var& x, const Var& b);

// Single-head scaled dot-product attention: queries [Tq, d], keys [Tk, d],
// values [Tk, dv] -> [Tq, dv]. The weighted sum is accumulated relative to
// the first value row, so constant value sequences reproduce that row
// exactly regardless of Tk.
Var CrossAttention(const Var& q, const Var& k, const Var& v);

// Per-channel normalization over (T, F) with affine gamma/beta of shape [C].
Var ChannelNorm(const Var& x, const Var& gamma, const Var& beta,
                double eps = 1e-5);

// [C, T, F] -> [C] mean over (T, F).
Var GlobalAvgPool(const Var& x);
// Adaptive average pooling of [C, T, F] onto an out_t x out_f grid. Cell i
// covers [floor(i*T/out), ceil((i+1)*T/out)).
Var AdaptiveAvgPool(const Var& x, int64_t out_t, int64_t out_f);
// Nearest-neighbour resize of [C, t, f] to [C, T, F]; row i reads
// floor(i * t / T).
Var UpsampleNearest(const Var& x, int64_t T, int64_t F);
// [C, Te, F] -> [C, T, F]: the mean over frames, repeated T times.
Var FrameMeanBroadcast(const Var& x, int64_t T);

struct ConvOptions {
  std::array<int64_t, 2> stride{1, 1};
  std::array<int64_t, 2> padding{0, 0};
  std::array<int64_t, 2> dilation{1, 1};
  int64_t groups = 1;
};

// x [Cin, T, F], w [Cout, Cin/groups, kT, kF], b [Cout] (may be undefined).
Var Conv2d(const Var& x, const Var& w, const Var& b, const ConvOptions& opt);

// Transposed convolution (gradient of Conv2d w.r.t. its input).
// w [Cin, Cout, kT, kF]. out_size fixes the output (T, F), which must lie
// within one stride of the natural size.
Var ConvTranspose2d(const Var& x, const Var& w, const Var& b,
                    const ConvOptions& opt, std::array<int64_t, 2> out_size);

// Output extent of a convolution along one axis.
int64_t ConvOutSize(int64_t in, int64_t kernel, int64_t stride,
                    int64_t padding, int64_t dilation);

}  // namespace pse::nn
