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
#include <string>

namespace v2nc::testing {

struct PropertyResult {
  int trials = 0;
  int failures = 0;
  double worst = 0.0;  // largest deviation seen, where one is measured
  std::string first_failure;
  bool pass() const { return trials > 0 && failures == 0; }
  void fail(const std::string& what) {
    if (failures++ == 0) first_failure = what;
  }
};

/// roc_auc_trapezoid against pair counting, n <= 50 with ties; tolerance 1e-12.
PropertyResult auc_equivalence(std::uint64_t seed, int trials);
/// median_iqr against sort-and-interpolate, exact equality.
PropertyResult quantile_equivalence(std::uint64_t seed, int trials);
/// largest_component against breadth-first flood fill on random 16^3 masks.
PropertyResult component_equivalence(std::uint64_t seed, int trials);
/// <conv3d(x,w), y> against <x, conv3d_transpose(y,w)>, relative 1e-4.
PropertyResult conv_adjoint(std::uint64_t seed, int trials);
/// extract_crop over random volume and box geometries: exact output shape,
/// binary mask channel, origin equal to the oracle, copied content and the
/// enclosed-voxel count.
PropertyResult crop_geometry(std::uint64_t seed, int trials);

}  // namespace v2nc::testing
