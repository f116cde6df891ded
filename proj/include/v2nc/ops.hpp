/*
 * Copyright 2026 The v2nc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <initializer_list>
#include <span>
#include <vector>

#include "v2nc/tensor.hpp"

namespace v2nc {

using Int3 = std::array<int, 3>;

/// Output extent of a strided window: floor((n + 2p - k) / s) + 1.
int conv_out_extent(int n, int k, int stride, int pad);

/// 3-D cross-correlation (no kernel flip) with zero padding.
/// x: [N,Cin,X,Y,Z], w: [Cout,Cin,kx,ky,kz], b: [Cout] or undefined.
Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, Int3 stride = {1, 1, 1},
              Int3 pad = {0, 0, 0});

/// Linear adjoint of conv3d with the same weight tensor.
/// x: [N,Cin,X,Y,Z], w: [Cin,Cout,kx,ky,kz]; output extent (n-1)s - 2p + k.
Tensor conv3d_transpose(const Tensor& x, const Tensor& w, const Tensor& b,
                        Int3 stride = {1, 1, 1}, Int3 pad = {0, 0, 0});

/// Strided non-overlapping conv whose kernel equals the stride.
Tensor downsample_conv(const Tensor& x, const Tensor& w, const Tensor& b);

/// Per-channel parametric ReLU; channels are dim 1. Slope gradient at x == 0
/// follows the positive branch.
Tensor prelu(const Tensor& x, const Tensor& slope);

/// Per-(n, c) standardisation with eps inside the square root, then affine.
Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

/// x: [N,F], w: [O,F], b: [O] -> [N,O].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// Concatenate along dim 1, in argument order.
Tensor concat_channels(std::span<const Tensor> xs);
Tensor concat_channels(std::initializer_list<Tensor> xs);

/// [N,C,...] -> [N,C], mean over all trailing dims.
Tensor global_avg_pool(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
inline Tensor add_residual(const Tensor& x, const Tensor& residual) { return add(x, residual); }
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sigmoid(const Tensor& x);
/// Softmax over dim 1 of [N,K].
Tensor softmax(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

/// Sum of weights[i] * x[i], accumulated in double.
Tensor weighted_sum(const Tensor& x, std::span<const float> weights);

}  // namespace v2nc
