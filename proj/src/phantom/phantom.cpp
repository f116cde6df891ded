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

#include "v2nc/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "v2nc/errors.hpp"
#include "v2nc/rng.hpp"

namespace v2nc {
namespace {

constexpr int kMarginVoxels = 2;
constexpr int kStageSamples = 20000;
constexpr std::uint64_t kStageSeed = 0x57a9e5eedULL;

double uniform(Rng& rng, Range r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); }

double equivalent_diameter_mm(double a, double b, double c) { return 2.0 * std::cbrt(a * b * c); }

void check_range(Range r, const char* name) {
  if (!(r.lo > 0.0) || !(r.hi >= r.lo)) {
    throw ConfigInvalid(std::string("phantom ") + name + " must satisfy 0 < lo <= hi");
  }
}

}  // namespace

void validate(const PhantomConfig& cfg) {
  for (int a = 0; a < 3; ++a) {
    if (cfg.dims[a] < 1) throw ConfigInvalid("phantom dims must be positive");
    if (!(cfg.spacing[a] > 0.0f)) throw ConfigInvalid("phantom spacing must be positive");
  }
  if (!(cfg.noise_sigma >= 0.0)) throw ConfigInvalid("phantom noise_sigma must be >= 0");
  check_range(cfg.radius_xy_mm, "radius_xy_mm");
  check_range(cfg.radius_z_mm, "radius_z_mm");
  check_range(cfg.core_scale, "core_scale");
  if (cfg.core_scale.hi >= 1.0) throw ConfigInvalid("phantom core_scale must stay below 1");
  const double rmax[3] = {cfg.radius_xy_mm.hi, cfg.radius_xy_mm.hi, cfg.radius_z_mm.hi};
  for (int a = 0; a < 3; ++a) {
    const double semi = rmax[a] / cfg.spacing[a];
    if (cfg.dims[a] - 1 - 2.0 * (semi + kMarginVoxels) < 0.0) {
      char msg[160];
      std::snprintf(msg, sizeof msg, "phantom radius %.3g mm does not fit axis %d (%d voxels of %.3g mm) with a %d-voxel margin",
                    rmax[a], a, cfg.dims[a], static_cast<double>(cfg.spacing[a]), kMarginVoxels);
      throw ConfigInvalid(msg);
    }
  }
}

std::array<double, 3> stage_thresholds(const PhantomConfig& cfg) {
  Rng rng(kStageSeed);
  std::vector<double> d(kStageSamples);
  for (auto& v : d) {
    const double a = uniform(rng, cfg.radius_xy_mm);
    const double b = uniform(rng, cfg.radius_xy_mm);
    const double c = uniform(rng, cfg.radius_z_mm);
    v = equivalent_diameter_mm(a, b, c);
  }
  std::sort(d.begin(), d.end());
  return {d[kStageSamples / 4], d[kStageSamples / 2], d[3 * kStageSamples / 4]};
}

PhantomCase generate_case(const PhantomConfig& cfg, std::uint64_t case_seed) {
  validate(cfg);
  Rng rng(derive_seed(cfg.seed, SeedStream::kPhantom, case_seed));

  PhantomCase pc;
  const double radius_mm[3] = {uniform(rng, cfg.radius_xy_mm), uniform(rng, cfg.radius_xy_mm),
                               uniform(rng, cfg.radius_z_mm)};
  for (int a = 0; a < 3; ++a) {
    const double semi = radius_mm[a] / cfg.spacing[a];
    pc.tumor.semi[a] = semi;
    pc.tumor.center[a] = uniform(rng, {semi + kMarginVoxels, cfg.dims[a] - 1 - semi - kMarginVoxels});
  }
  const double scale = uniform(rng, cfg.core_scale);
  pc.core.center = pc.tumor.center;
  for (int a = 0; a < 3; ++a) pc.core.semi[a] = pc.tumor.semi[a] * scale;
  const double u_progression = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  pc.t1c = Volume(cfg.dims, cfg.spacing);
  pc.t2 = Volume(cfg.dims, cfg.spacing);
  pc.mask = Volume(cfg.dims, cfg.spacing);
  long tumor_voxels = 0, core_voxels = 0;
  for (int z = 0; z < cfg.dims[2]; ++z)
    for (int y = 0; y < cfg.dims[1]; ++y)
      for (int x = 0; x < cfg.dims[0]; ++x) {
        if (!pc.tumor.contains(x, y, z)) continue;
        const bool core = pc.core.contains(x, y, z);
        ++tumor_voxels;
        core_voxels += core;
        pc.mask.at(x, y, z) = 1.0f;
        pc.t1c.at(x, y, z) = static_cast<float>(core ? cfg.t1c_core : cfg.t1c_rim);
        pc.t2.at(x, y, z) = static_cast<float>(cfg.t2_tumor);
      }
  if (cfg.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (auto& v : pc.t1c.data()) v = static_cast<float>(v + noise(rng));
    for (auto& v : pc.t2.data()) v = static_cast<float>(v + noise(rng));
  }

  const double voxel_mm3 = static_cast<double>(cfg.spacing[0]) * cfg.spacing[1] * cfg.spacing[2];
  pc.volume_cc = static_cast<double>(tumor_voxels) * voxel_mm3 / 1000.0;
  pc.heterogeneity = tumor_voxels > 0 ? static_cast<double>(core_voxels) / static_cast<double>(tumor_voxels) : 0.0;
  const auto& s = cfg.signal;
  const double logit = s.a_vol * (pc.volume_cc - s.v0) + s.a_het * pc.heterogeneity + s.bias;
  pc.progression_prob = 1.0 / (1.0 + std::exp(-logit));

  const auto thr = stage_thresholds(cfg);
  const double d = equivalent_diameter_mm(radius_mm[0], radius_mm[1], radius_mm[2]);
  const int stage = static_cast<int>(std::count_if(thr.begin(), thr.end(), [d](double t) { return d > t; }));

  char id[32];
  std::snprintf(id, sizeof id, "case_%04llu", static_cast<unsigned long long>(case_seed));
  pc.record.case_id = id;
  pc.record.t_stage = stage;
  pc.record.overall_stage = stage;
  pc.record.progression_3yr = u_progression < pc.progression_prob ? 1 : 0;
  return pc;
}

DatasetSummary generate_dataset(const PhantomConfig& cfg, int n, const std::filesystem::path& out_dir) {
  validate(cfg);
  if (n < 1) throw ConfigInvalid("phantom dataset needs at least one case");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoFailure("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetSummary summary;
  std::vector<StudyRecord> records;
  for (int i = 0; i < n; ++i) {
    auto pc = generate_case(cfg, static_cast<std::uint64_t>(i));
    auto& rec = pc.record;
    rec.t1c_path = out_dir / (rec.case_id + "_t1c.nii");
    rec.t2_path = out_dir / (rec.case_id + "_t2.nii");
    rec.mask_path = out_dir / (rec.case_id + "_mask.nii");
    write_nifti(pc.t1c, rec.t1c_path);
    write_nifti(pc.t2, rec.t2_path);
    write_nifti(pc.mask, *rec.mask_path);
    summary.positives += rec.progression_3yr;
    records.push_back(std::move(rec));
  }
  summary.cases = n;
  summary.manifest = out_dir / "manifest.jsonl";
  write_manifest(records, summary.manifest);
  return summary;
}

}  // namespace v2nc
