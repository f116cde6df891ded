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

#include <algorithm>
#include <cmath>

#include "v2nc/errors.hpp"
#include "v2nc/volume_io.hpp"

namespace v2nc {
namespace {

void check_geometry(const Dims3& dims, const Spacing3& spacing) {
  for (int i = 0; i < 3; ++i) {
    if (dims[i] < 1) throw ShapeMismatch("volume dims must be >= 1");
    if (!(spacing[i] > 0.0f) || !std::isfinite(spacing[i])) {
      throw ShapeMismatch("volume spacing must be positive and finite");
    }
  }
}

std::size_t voxel_count(const Dims3& d) {
  return static_cast<std::size_t>(d[0]) * d[1] * d[2];
}

std::string dims_str(const Dims3& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

}  // namespace

Volume::Volume(Dims3 dims, Spacing3 spacing) : dims_(dims), spacing_(spacing) {
  check_geometry(dims_, spacing_);
  data_.assign(voxel_count(dims_), 0.0f);
}

Volume::Volume(Dims3 dims, Spacing3 spacing, std::vector<float> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  check_geometry(dims_, spacing_);
  if (data_.size() != voxel_count(dims_)) {
    throw ShapeMismatch("volume data has " + std::to_string(data_.size()) + " voxels, dims " +
                        dims_str(dims_) + " need " + std::to_string(voxel_count(dims_)));
  }
}

Volume resample_trilinear(const Volume& vol, Spacing3 target) {
  for (float t : target) {
    if (!(t > 0.0f)) throw ShapeMismatch("target spacing must be positive");
  }
  const auto& in_dims = vol.dims();
  const auto& in_sp = vol.spacing();
  Dims3 out_dims{};
  for (int i = 0; i < 3; ++i) {
    const double extent = static_cast<double>(in_dims[i]) * in_sp[i];
    out_dims[i] = std::max(1, static_cast<int>(std::lround(extent / target[i])));
  }
  Volume out(out_dims, target);

  // Continuous input index of each output voxel centre, per axis.
  struct Tap {
    int lo, hi;
    float w;
  };
  std::array<std::vector<Tap>, 3> taps;
  for (int a = 0; a < 3; ++a) {
    taps[a].resize(out_dims[a]);
    for (int i = 0; i < out_dims[a]; ++i) {
      double pos = (i + 0.5) * static_cast<double>(target[a]) / in_sp[a] - 0.5;
      pos = std::clamp(pos, 0.0, static_cast<double>(in_dims[a] - 1));
      const int lo = static_cast<int>(std::floor(pos));
      const int hi = std::min(lo + 1, in_dims[a] - 1);
      taps[a][i] = {lo, hi, static_cast<float>(pos - lo)};
    }
  }

  for (int z = 0; z < out_dims[2]; ++z) {
    const Tap tz = taps[2][z];
    for (int y = 0; y < out_dims[1]; ++y) {
      const Tap ty = taps[1][y];
      for (int x = 0; x < out_dims[0]; ++x) {
        const Tap tx = taps[0][x];
        auto lerp_x = [&](int yy, int zz) {
          const float a = vol.at(tx.lo, yy, zz);
          const float b = vol.at(tx.hi, yy, zz);
          return tx.w == 0.0f ? a : a + tx.w * (b - a);
        };
        auto lerp_xy = [&](int zz) {
          const float a = lerp_x(ty.lo, zz);
          if (ty.w == 0.0f) return a;
          return a + ty.w * (lerp_x(ty.hi, zz) - a);
        };
        float v = lerp_xy(tz.lo);
        if (tz.w != 0.0f) v += tz.w * (lerp_xy(tz.hi) - v);
        out.at(x, y, z) = v;
      }
    }
  }
  return out;
}

Volume normalize_zscore(const Volume& vol) {
  if (vol.empty()) throw ShapeMismatch("normalize_zscore: empty volume");
  const auto data = vol.data();
  double sum = 0.0;
  for (float v : data) sum += v;
  const double mean = sum / static_cast<double>(data.size());
  double sq = 0.0;
  for (float v : data) sq += (v - mean) * (v - mean);
  const double stddev = std::sqrt(sq / static_cast<double>(data.size()));

  std::vector<float> out(data.size(), 0.0f);
  if (stddev >= 1e-8) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      out[i] = static_cast<float>((data[i] - mean) / stddev);
    }
  }
  return Volume(vol.dims(), vol.spacing(), std::move(out));
}

Volume binarize(const Volume& vol, float threshold) {
  std::vector<float> out(vol.size());
  const auto data = vol.data();
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i] >= threshold ? 1.0f : 0.0f;
  return Volume(vol.dims(), vol.spacing(), std::move(out));
}

CaseVolumes preprocess_pair(const Volume& t1c, const Volume& t2, Spacing3 target_spacing) {
  CaseVolumes c;
  c.t1c = normalize_zscore(resample_trilinear(t1c, target_spacing));
  c.t2 = normalize_zscore(resample_trilinear(t2, target_spacing));
  if (c.t1c.dims() != c.t2.dims()) {
    throw ShapeMismatch("T1C grid " + dims_str(c.t1c.dims()) + " and T2 grid " +
                        dims_str(c.t2.dims()) + " differ after resampling");
  }
  return c;
}

CaseVolumes load_case(const StudyRecord& rec, Spacing3 target_spacing) {
  const Volume t1c = read_nifti(rec.t1c_path);
  const Volume t2 = read_nifti(rec.t2_path);
  CaseVolumes c;
  try {
    c = preprocess_pair(t1c, t2, target_spacing);
  } catch (const ShapeMismatch& e) {
    throw ShapeMismatch("case " + rec.case_id + ": " + e.what());
  }
  if (rec.mask_path) {
    const Volume mask = read_nifti(*rec.mask_path);
    if (mask.dims() != t1c.dims()) {
      throw ShapeMismatch("case " + rec.case_id + ": mask dims " + dims_str(mask.dims()) +
                          " differ from T1C dims " + dims_str(t1c.dims()));
    }
    for (float v : mask.data()) {
      if (v != 0.0f && v != 1.0f) {
        throw ParseError("case " + rec.case_id + ": mask " + rec.mask_path->string() +
                         " is not binary");
      }
    }
    c.mask = binarize(resample_trilinear(mask, target_spacing), 0.5f);
  }
  return c;
}

}  // namespace v2nc
