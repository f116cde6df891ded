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

#include <span>

#include "v2nc/tensor.hpp"

namespace v2nc {

inline constexpr float kDiceSmooth = 1e-5f;

/// 1 - (2 sum(p g) + eps) / (sum(p^2) + sum(g^2) + eps), over every element.
/// Differentiable w.r.t. p only; g is treated as a constant.
Tensor soft_dice_loss(const Tensor& p, const Tensor& g, float eps = kDiceSmooth);

/// -[w_pos y log s(z) + w_neg (1-y) log(1 - s(z))] in softplus form, averaged
/// over the batch. logits has one element per label.
Tensor weighted_bce(const Tensor& logits, std::span<const int> labels, float w_pos, float w_neg);
Tensor weighted_bce(const Tensor& logit, int label, float w_pos, float w_neg);

/// Mean over the batch of -log softmax(logits)[label]; logits is [N,K].
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace v2nc
