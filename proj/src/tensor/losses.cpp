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

#include "v2nc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "node.hpp"
#include "v2nc/errors.hpp"

namespace v2nc {
namespace {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid_d(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

Tensor soft_dice_loss(const Tensor& p, const Tensor& g, float eps) {
  if (p.shape() != g.shape()) {
    throw ShapeMismatch("soft_dice_loss: prediction " + shape_str(p.shape()) + " vs target " +
                        shape_str(g.shape()));
  }
  const auto pv = p.values(), gv = g.values();
  double inter = 0.0, psq = 0.0, gsq = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    inter += static_cast<double>(pv[i]) * gv[i];
    psq += static_cast<double>(pv[i]) * pv[i];
    gsq += static_cast<double>(gv[i]) * gv[i];
  }
  const double num = 2.0 * inter + eps;
  const double den = psq + gsq + eps;
  const float loss = static_cast<float>(1.0 - num / den);
  std::vector<float> target(gv.begin(), gv.end());
  return detail::make_result({1}, {loss}, {p},
                             [num, den, target = std::move(target)](detail::Node& self,
                                                                    std::span<const float> dout) {
                               const auto pv = self.input_value(0);
                               auto dp = self.input_grad(0);
                               const double k = dout[0] / (den * den);
                               for (std::size_t i = 0; i < dp.size(); ++i) {
                                 dp[i] += static_cast<float>(-k * (2.0 * target[i] * den - 2.0 * pv[i] * num));
                               }
                             });
}

Tensor weighted_bce(const Tensor& logits, std::span<const int> labels, float w_pos, float w_neg) {
  if (!(w_pos > 0.0f) || !(w_neg > 0.0f)) throw ConfigInvalid("weighted_bce: class weights must be positive");
  if (logits.numel() != labels.size()) {
    throw ShapeMismatch("weighted_bce: " + std::to_string(logits.numel()) + " logits for " +
                        std::to_string(labels.size()) + " labels");
  }
  const auto zv = logits.values();
  const double n = static_cast<double>(labels.size());
  double acc = 0.0;
  std::vector<float> dz(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double z = zv[i];
    if (labels[i] == 1) {
      acc += w_pos * softplus(-z);
      dz[i] = static_cast<float>(w_pos * (sigmoid_d(z) - 1.0) / n);
    } else {
      acc += w_neg * softplus(z);
      dz[i] = static_cast<float>(w_neg * sigmoid_d(z) / n);
    }
  }
  return detail::make_result({1}, {static_cast<float>(acc / n)}, {logits},
                             [dz = std::move(dz)](detail::Node& self, std::span<const float> dout) {
                               auto d = self.input_grad(0);
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] += dout[0] * dz[i];
                             });
}

Tensor weighted_bce(const Tensor& logit, int label, float w_pos, float w_neg) {
  const int labels[1] = {label};
  return weighted_bce(logit, labels, w_pos, w_neg);
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.ndim() != 2 || static_cast<std::size_t>(logits.dim(0)) != labels.size()) {
    throw ShapeMismatch("softmax_cross_entropy: logits " + shape_str(logits.shape()) + " for " +
                        std::to_string(labels.size()) + " labels");
  }
  const int n = logits.dim(0), k = logits.dim(1);
  const auto zv = logits.values();
  std::vector<float> dz(zv.size());
  double acc = 0.0;
  for (int s = 0; s < n; ++s) {
    const int y = labels[s];
    if (y < 0 || y >= k) throw ShapeMismatch("softmax_cross_entropy: label out of range");
    const float* row = zv.data() + s * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    acc += lse - row[y];
    for (int j = 0; j < k; ++j) {
      const double p = std::exp(row[j] - lse);
      dz[s * k + j] = static_cast<float>((p - (j == y ? 1.0 : 0.0)) / n);
    }
  }
  return detail::make_result({1}, {static_cast<float>(acc / n)}, {logits},
                             [dz = std::move(dz)](detail::Node& self, std::span<const float> dout) {
                               auto d = self.input_grad(0);
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] += dout[0] * dz[i];
                             });
}

}  // namespace v2nc
