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

#include <cstdint>
#include <span>
#include <vector>

#include "v2nc/tensor.hpp"

namespace v2nc {

struct AdamOptions {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

/// One bias-corrected Adam update of every parameter from its accumulated
/// gradient (a parameter without a gradient counts as zero gradient).
/// Moments are created on the first call; later calls must pass the same
/// parameter list, otherwise ShapeMismatch.
void adam_step(std::span<Tensor> params, AdamState& state);

/// Owns a parameter list and its Adam state.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  void step() { adam_step(params_, state_); }
  void zero_grad();
  const AdamState& state() const noexcept { return state_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace v2nc
