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

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace v2nc {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct Node;
}

/// Dense row-major float32 tensor; a handle onto a node of the reverse-mode
/// graph. Copies share the node. 5-D feature maps are laid out N x C x X x Y x Z
/// with Z (the slice axis) fastest.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<float> values, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  int dim(int i) const { return shape()[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape().size()); }
  std::size_t numel() const;

  std::span<const float> values() const;
  /// Writable storage. Only meaningful for leaves (parameters, inputs);
  /// writing into an interior node does not update its dependants.
  std::span<float> mutable_values();
  float item() const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool is_leaf() const;

  /// Accumulated gradient; empty until a backward pass reaches this leaf.
  std::span<const float> grad() const;
  std::span<float> mutable_grad();
  bool has_grad() const;
  void zero_grad();

  /// New leaf holding a copy of the values, outside any graph.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Reverse sweep from a scalar. Leaf gradients accumulate across calls; each
/// call's contribution is summed separately and added at the end, so two
/// identical passes give exactly twice the gradient.
void backward(const Tensor& loss);

bool grad_enabled();

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// When on, every op output is scanned for NaN/Inf and DivergedLoss is thrown.
/// Defaults to on in builds without NDEBUG.
void set_finite_checks(bool on);
bool finite_checks();

}  // namespace v2nc
