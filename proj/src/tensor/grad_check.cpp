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

#include "v2nc/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "v2nc/ops.hpp"
#include "v2nc/rng.hpp"

namespace v2nc {
namespace {

std::vector<float> projection_weights(std::size_t n) {
  Rng rng(0x5eedULL);
  std::uniform_real_distribution<float> u(0.5f, 1.5f);
  std::vector<float> w(n);
  for (auto& v : w) v = u(rng);
  return w;
}

double project(const Tensor& out, const std::vector<float>& weights) {
  const auto v = out.values();
  if (v.size() == 1) return v[0];
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += static_cast<double>(weights[i]) * v[i];
  return acc;
}

}  // namespace

GradCheckReport grad_check_report(const TensorFn& fn, std::vector<Tensor>& inputs, double eps) {
  for (auto& t : inputs) t.zero_grad();
  const Tensor out = fn(inputs);
  const auto weights = projection_weights(out.numel());
  backward(out.numel() == 1 ? out : weighted_sum(out, weights));

  GradCheckReport report;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor& in = inputs[k];
    if (!in.requires_grad()) continue;
    const std::vector<float> analytic(in.grad().begin(), in.grad().end());
    auto values = in.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float original = values[i];
      const float up = static_cast<float>(original + eps);
      const float down = static_cast<float>(original - eps);
      values[i] = up;
      const double f_up = project(fn(inputs), weights);
      values[i] = down;
      const double f_down = project(fn(inputs), weights);
      values[i] = original;

      const double numeric = (f_up - f_down) / (static_cast<double>(up) - static_cast<double>(down));
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates;
      if (rel > report.max_rel_error || !std::isfinite(rel)) {
        report.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
        report.worst_input = k;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace v2nc
