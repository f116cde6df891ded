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
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "v2nc/metrics.hpp"
#include "v2nc/networks.hpp"
#include "v2nc/volume_io.hpp"

namespace v2nc {

struct TrainConfig {
  std::uint64_t seed = 0;
  int epochs = 60;
  int batch_size = 2;
  float lr = 1e-4f;
  double val_fraction = 0.15;
  float lambda_cls = kDefaultClsWeight;
  std::optional<float> w_pos;  // default n_neg / n_pos of the training split
  std::optional<float> w_neg;  // default 1
  float binarize_threshold = 0.5f;
  std::filesystem::path checkpoint_dir;  // empty: keep the best weights in memory only
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Throws ConfigInvalid.
void validate(const TrainConfig& cfg);

using LogFn = std::function<void(const std::string&)>;

// ---- data ------------------------------------------------------------------

struct Split {
  std::vector<StudyRecord> train;
  std::vector<StudyRecord> val;
};

/// Seeded permutation of 0..n-1 (Fisher-Yates on raw mt19937_64 output).
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

/// Seeded shuffle, then round(n * val_fraction) cases to validation,
/// stratified by progression label: each stratum gives floor(n_s * fraction)
/// and the leftover places go by largest remainder. Throws EmptyDataset.
Split split_dataset(std::span<const StudyRecord> records, double val_fraction, std::uint64_t seed);

/// Volume (x-fastest) <-> [1,1,X,Y,Z] tensor (z-fastest).
Tensor volume_to_tensor(const Volume& v);
Volume tensor_to_volume(const Tensor& t, Spacing3 spacing, int sample = 0, int channel = 0);

// ---- crops -----------------------------------------------------------------

inline constexpr Int3 kCropSize{64, 64, 12};

/// Keeps the largest 26-connected foreground component; ties go to the
/// component containing the smallest linear index.
Volume largest_component(const Volume& mask);

struct BoundingBox {
  Int3 lo{0, 0, 0};
  Int3 hi{-1, -1, -1};  // inclusive
  bool empty() const { return hi[0] < lo[0]; }
};

BoundingBox bounding_box(const Volume& mask);

/// Window origin centred on the bounding box, clamped into the volume:
/// clamp(round((lo + hi) / 2) - size / 2, 0, max(0, dim - size)), with halves
/// rounded up.
Int3 crop_origin(const BoundingBox& box, const Dims3& dims, Int3 size = kCropSize);

struct CropVolume {
  Tensor data;  // [3,X,Y,Z]: T1C, T2, mask
  Int3 origin{0, 0, 0};
  bool fallback_used = false;
};

/// Crop of the T1C/T2/mask stack around the largest mask component, zero
/// padded to `size`; an empty mask falls back to a centred crop.
CropVolume extract_crop(const Volume& t1c, const Volume& t2, const Volume& mask, Int3 size = kCropSize);

// ---- training --------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};
using History = std::vector<EpochRecord>;

void write_history_csv(const History& history, const std::filesystem::path& path);

struct SegTrainResult {
  SegNet net;  // best-validation weights
  History history;
  int best_epoch = 0;
  double best_val_dice = 0.0;    // mean over validation cases
  double best_val_median = 0.0;  // highest per-epoch median over validation cases
  EvalReport val_report;       // per-case Dice of the best epoch
  std::filesystem::path checkpoint;
};

/// Adam + seg_loss over `epochs`; model selection by mean validation Dice
/// (binarised at cfg.binarize_threshold). Throws MissingMask, MissingLabel,
/// DivergedLoss.
SegTrainResult train_segmentation(const TrainConfig& cfg, const SegNetConfig& net_cfg, const std::string& arch,
                                  std::span<const StudyRecord> train, std::span<const StudyRecord> val,
                                  const LogFn& log = {});

struct ClsTrainResult {
  ResNet3d net;  // best-validation weights
  History history;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  float w_pos = 1.0f;
  float w_neg = 1.0f;
  OperatingPoint operating_point;  // Youden on validation, best epoch
  EvalReport val_report;
  std::filesystem::path checkpoint;
};

/// Crops come from the frozen segmentation network's predicted masks. Model
/// selection by validation AUC. Throws SingleClassDataset.
ClsTrainResult train_classifier(const TrainConfig& cfg, const ClsNetConfig& net_cfg, const SegNet& seg,
                                std::span<const StudyRecord> train, std::span<const StudyRecord> val,
                                const LogFn& log = {});

// ---- inference -------------------------------------------------------------

struct Prediction {
  Volume mask;
  double prob = 0.0;
  bool fallback_used = false;
  Int3 crop_origin{0, 0, 0};
};

/// Binary mask from the segmentation network (largest component kept).
Volume segment(const SegNet& seg, const Volume& t1c, const Volume& t2, float threshold = 0.5f);

/// Inputs must already be preprocessed (resampled and normalised).
Prediction predict(const SegNet& seg, const ResNet3d& cls, const Volume& t1c, const Volume& t2,
                   float threshold = 0.5f);
Prediction predict(const std::filesystem::path& seg_checkpoint, const std::filesystem::path& cls_checkpoint,
                   const Volume& t1c, const Volume& t2);

}  // namespace v2nc
