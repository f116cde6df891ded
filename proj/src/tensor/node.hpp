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

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "v2nc/tensor.hpp"

namespace v2nc::detail {

struct Node;

/// Backward closure: receives the node (for its inputs and saved value) and
/// the gradient flowing into its output.
using BackwardFn = std::function<void(Node& self, std::span<const float> out_grad)>;

struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
  std::vector<float> pass_grad;

  /// Gradient buffer of input i for the current pass, or an empty span when
  /// that input does not take gradients.
  std::span<float> input_grad(std::size_t i) {
    Node& in = *inputs[i];
    if (!in.requires_grad) return {};
    if (in.pass_grad.empty()) in.pass_grad.assign(in.value.size(), 0.0f);
    return in.pass_grad;
  }
  std::span<const float> input_value(std::size_t i) const { return inputs[i]->value; }
};

/// Wraps a freshly computed value as a graph node. Records the inputs and
/// backward closure only when grad mode is on and some input needs grad.
Tensor make_result(Shape shape, std::vector<float> value, std::vector<Tensor> inputs,
                   BackwardFn backward);

}  // namespace v2nc::detail
