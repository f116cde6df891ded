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
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace v2nc {

using Dims3 = std::array<int, 3>;
using Spacing3 = std::array<float, 3>;  // mm per voxel, as stored in NIfTI pixdim

/// A 3D scalar grid. Voxels are stored x-fastest (NIfTI order); spacing is
/// millimetres per voxel.
class Volume {
 public:
  Volume() = default;
  /// Zero-filled volume. Throws ShapeMismatch on non-positive dims or spacing.
  Volume(Dims3 dims, Spacing3 spacing);
  Volume(Dims3 dims, Spacing3 spacing, std::vector<float> data);

  const Dims3& dims() const noexcept { return dims_; }
  const Spacing3& spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  std::size_t index(int x, int y, int z) const noexcept {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_[1]) * z);
  }
  float at(int x, int y, int z) const noexcept { return data_[index(x, y, z)]; }
  float& at(int x, int y, int z) noexcept { return data_[index(x, y, z)]; }

  bool same_geometry(const Volume& other) const noexcept {
    return dims_ == other.dims_ && spacing_ == other.spacing_;
  }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Dims3 dims_{0, 0, 0};
  Spacing3 spacing_{1.0f, 1.0f, 1.0f};
  std::vector<float> data_;
};

/// Reads an uncompressed little-endian NIfTI-1 single file (.nii) with
/// datatype uint8, int16 or float32 and exactly three dimensions.
/// Orientation (qform/sform) is ignored. Non-finite voxels are rejected.
Volume read_nifti(const std::filesystem::path& path);

/// Writes float32 NIfTI-1 with vox_offset 352. Spacing is written to
/// pixdim[1..3] in mm.
void write_nifti(const Volume& vol, const std::filesystem::path& path);

/// Trilinear resampling onto a grid with the requested spacing. The physical
/// extent is preserved (dims_i = max(1, round(n_i * s_i / t_i))); samples
/// outside the input clamp to the nearest border voxel.
Volume resample_trilinear(const Volume& vol, Spacing3 target_spacing);

/// Per-volume z-score (population std). Near-constant input maps to zeros.
Volume normalize_zscore(const Volume& vol);

/// Sets every voxel to 1 where value >= threshold, 0 elsewhere.
Volume binarize(const Volume& vol, float threshold = 0.5f);

/// One patient case as listed in a JSON-lines manifest. Relative paths are
/// resolved against the manifest's directory at load time.
struct StudyRecord {
  std::string case_id;
  std::filesystem::path t1c_path;
  std::filesystem::path t2_path;
  std::optional<std::filesystem::path> mask_path;
  std::optional<int> overall_stage;
  std::optional<int> t_stage;
  int progression_3yr = 0;
  std::optional<std::string> split_tag;

  friend bool operator==(const StudyRecord&, const StudyRecord&) = default;
};

/// Parses a JSON-lines manifest. Blank lines are skipped but still counted
/// for line numbers in ParseError messages.
std::vector<StudyRecord> load_manifest(const std::filesystem::path& path);

/// Writes records as JSON-lines. Paths are written relative to the manifest
/// directory when they live below it.
void write_manifest(const std::vector<StudyRecord>& records, const std::filesystem::path& path);

/// Preprocessed image pair (and optional mask) for one case.
struct CaseVolumes {
  Volume t1c;
  Volume t2;
  std::optional<Volume> mask;
};

/// Default network-input grid: 1 x 1 x 6 mm.
inline constexpr Spacing3 kDefaultSpacing{1.0f, 1.0f, 6.0f};

/// Loads a case and applies resample -> z-score to both images; the mask is
/// resampled trilinearly and re-binarized at 0.5. Throws ShapeMismatch
/// (naming the case) when T1C/T2/mask geometries disagree.
CaseVolumes load_case(const StudyRecord& rec, Spacing3 target_spacing = kDefaultSpacing);

/// Resample + z-score for an already-loaded image pair.
CaseVolumes preprocess_pair(const Volume& t1c, const Volume& t2,
                            Spacing3 target_spacing = kDefaultSpacing);

}  // namespace v2nc
