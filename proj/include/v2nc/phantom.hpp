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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "v2nc/volume_io.hpp"

namespace v2nc {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

/// p(progression) = logistic(a_vol * (volume_cc - v0) + a_het * heterogeneity + bias)
struct ProgressionSignal {
  double a_vol = 3.0;
  double v0 = 4.0;
  double a_het = 8.0;
  double bias = -2.0;
  friend bool operator==(const ProgressionSignal&, const ProgressionSignal&) = default;
};

struct PhantomConfig {
  Dims3 dims{48, 48, 16};
  Spacing3 spacing{1.0f, 1.0f, 6.0f};
  double noise_sigma = 0.1;
  Range radius_xy_mm{4.0, 12.0};
  Range radius_z_mm{6.0, 15.0};
  Range core_scale{0.3, 0.8};  // core semi-axes as a fraction of the tumour's
  double t1c_rim = 1.0;
  double t1c_core = 0.6;
  double t2_tumor = 0.9;
  ProgressionSignal signal;
  std::uint64_t seed = 0;
  friend bool operator==(const PhantomConfig&, const PhantomConfig&) = default;
};

/// Throws ConfigInvalid unless the largest tumour fits with a 2-voxel margin.
void validate(const PhantomConfig& cfg);

struct Ellipsoid {
  std::array<double, 3> center{};  // voxel coordinates
  std::array<double, 3> semi{};    // voxels
  bool contains(int x, int y, int z) const {
    const double dx = (x - center[0]) / semi[0], dy = (y - center[1]) / semi[1], dz = (z - center[2]) / semi[2];
    return dx * dx + dy * dy + dz * dz <= 1.0;
  }
};

struct PhantomCase {
  Volume t1c;
  Volume t2;
  Volume mask;
  StudyRecord record;  // paths left empty
  Ellipsoid tumor;
  Ellipsoid core;
  double volume_cc = 0.0;      // mask voxel count times voxel volume
  double heterogeneity = 0.0;  // core voxels / tumour voxels
  double progression_prob = 0.0;
};

/// Equivalent-diameter quartile boundaries (mm) of the configured radius
/// distribution; t_stage = number of boundaries the case's diameter exceeds.
std::array<double, 3> stage_thresholds(const PhantomConfig& cfg);

/// Fully determined by (cfg.seed, case_seed).
PhantomCase generate_case(const PhantomConfig& cfg, std::uint64_t case_seed);

struct DatasetSummary {
  std::filesystem::path manifest;
  int cases = 0;
  int positives = 0;
  double prevalence() const { return cases > 0 ? static_cast<double>(positives) / cases : 0.0; }
};

/// Writes cases 0..n-1 as NIfTI triples plus manifest.jsonl under out_dir.
DatasetSummary generate_dataset(const PhantomConfig& cfg, int n, const std::filesystem::path& out_dir);

}  // namespace v2nc
