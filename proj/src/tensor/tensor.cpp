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

#include <cmath>
#include <unordered_set>

#include "node.hpp"
#include "v2nc/errors.hpp"

namespace v2nc {
namespace {

thread_local bool g_grad_enabled = true;

#ifdef NDEBUG
bool g_finite_checks = false;
#else
bool g_finite_checks = true;
#endif

detail::Node& deref(const std::shared_ptr<detail::Node>& n) {
  if (!n) throw ShapeMismatch("use of an undefined tensor");
  return *n;
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor Tensor::from(Shape shape, std::vector<float> values, bool requires_grad) {
  for (int d : shape) {
    if (d < 1) throw ShapeMismatch("tensor dims must be positive: " + shape_str(shape));
  }
  if (values.size() != v2nc::numel(shape)) {
    throw ShapeMismatch("tensor of shape " + shape_str(shape) + " given " +
                        std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0f, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  const std::size_t n = v2nc::numel(shape);
  return from(std::move(shape), std::vector<float>(n, value), requires_grad);
}

Tensor Tensor::scalar(float value, bool requires_grad) { return from({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return deref(node_).shape; }
std::size_t Tensor::numel() const { return deref(node_).value.size(); }
std::span<const float> Tensor::values() const { return deref(node_).value; }
std::span<float> Tensor::mutable_values() { return deref(node_).value; }

float Tensor::item() const {
  const auto& n = deref(node_);
  if (n.value.size() != 1) throw NotScalar("item() on tensor of shape " + shape_str(n.shape));
  return n.value[0];
}

bool Tensor::requires_grad() const { return deref(node_).requires_grad; }
void Tensor::set_requires_grad(bool on) { deref(node_).requires_grad = on; }
bool Tensor::is_leaf() const { return !deref(node_).backward; }

std::span<const float> Tensor::grad() const { return deref(node_).grad; }
std::span<float> Tensor::mutable_grad() {
  auto& n = deref(node_);
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0f);
  return n.grad;
}
bool Tensor::has_grad() const { return !deref(node_).grad.empty(); }
void Tensor::zero_grad() { deref(node_).grad.clear(); }

Tensor Tensor::detach() const {
  const auto& n = deref(node_);
  return from(n.shape, n.value, false);
}

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks() { return g_finite_checks; }

namespace detail {

Tensor make_result(Shape shape, std::vector<float> value, std::vector<Tensor> inputs,
                   BackwardFn backward) {
  if (g_finite_checks) {
    for (float v : value) {
      if (!std::isfinite(v)) throw DivergedLoss("non-finite value produced by tensor op");
    }
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& t : inputs) needs = needs || (t.defined() && t.requires_grad());
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) {
      // Undefined optional inputs (e.g. a missing bias) become constant zeros.
      node->inputs.push_back(t.defined() ? t.node() : std::make_shared<Node>());
    }
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

void backward(const Tensor& loss) {
  if (!loss.defined()) throw NotScalar("backward on undefined tensor");
  if (loss.numel() != 1) throw NotScalar("backward needs a scalar, got shape " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* in = node->inputs[next++].get();
      if (in->requires_grad && visited.insert(in).second) stack.emplace_back(in, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* n : order) n->pass_grad.clear();
  loss.node()->pass_grad.assign(1, 1.0f);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node& n = **it;
    if (n.pass_grad.empty()) continue;
    if (n.backward) {
      n.backward(n, n.pass_grad);
      std::vector<float>().swap(n.pass_grad);
    } else {
      if (n.grad.empty()) {
        n.grad = std::move(n.pass_grad);
      } else {
        for (std::size_t i = 0; i < n.grad.size(); ++i) n.grad[i] += n.pass_grad[i];
      }
      std::vector<float>().swap(n.pass_grad);
    }
  }
}

}  // namespace v2nc
