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
#include <vector>

#include "v2nc/tensor.hpp"

namespace v2nc {

using TensorFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of fn against central differences for
/// every coordinate of every input with requires_grad set. fn may return a
/// scalar or any tensor; non-scalar outputs are reduced with fixed
/// pseudo-random weights in [0.5, 1.5). Differences are formed in double from
/// the actually representable perturbation. Relative error per coordinate is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check_report(const TensorFn& fn, std::vector<Tensor>& inputs, double eps);

inline double grad_check(const TensorFn& fn, std::vector<Tensor>& inputs, double eps) {
  return grad_check_report(fn, inputs, eps).max_rel_error;
}

}  // namespace v2nc
