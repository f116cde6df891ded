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

#include "v2nc/adam.hpp"

#include <cmath>

#include "v2nc/errors.hpp"

namespace v2nc {

void adam_step(std::span<Tensor> params, AdamState& state) {
  const auto& opt = state.options;
  if (!(opt.beta1 >= 0.0f && opt.beta1 < 1.0f && opt.beta2 >= 0.0f && opt.beta2 < 1.0f)) {
    throw ConfigInvalid("adam: betas must lie in [0, 1)");
  }
  if (state.m.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0f);
      state.v.emplace_back(p.numel(), 0.0f);
    }
  }
  if (state.m.size() != params.size()) throw ShapeMismatch("adam: parameter count changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].numel()) {
      throw ShapeMismatch("adam: parameter " + std::to_string(i) + " changed size");
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(static_cast<double>(opt.beta1), t);
  const double c2 = 1.0 - std::pow(static_cast<double>(opt.beta2), t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].mutable_values();
    const auto grad = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const float gk = grad.empty() ? 0.0f : grad[k];
      m[k] = opt.beta1 * m[k] + (1.0f - opt.beta1) * gk;
      v[k] = opt.beta2 * v[k] + (1.0f - opt.beta2) * gk * gk;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      theta[k] = static_cast<float>(theta[k] - opt.lr * mhat / (std::sqrt(vhat) + opt.eps));
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)) {
  state_.options = options;
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace v2nc
