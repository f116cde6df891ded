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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "v2nc/checkpoint.hpp"
#include "v2nc/ops.hpp"
#include "v2nc/tensor.hpp"

namespace v2nc {

/// Bumped whenever a builder's parameter layout changes.
inline constexpr int kLayoutVersion = 1;

struct SegNetConfig {
  int base_channels = 8;
  int depth = 4;
  int convs_per_level = 2;
  Int3 kernel{3, 3, 3};
  bool dual_encoder = true;
  bool cls_route = true;
  int num_overall_classes = 4;
  int num_t_classes = 4;
  int cls_hidden = 64;
  Int3 input_shape{48, 48, 16};
  friend bool operator==(const SegNetConfig&, const SegNetConfig&) = default;
};

struct ClsNetConfig {
  int in_channels = 3;
  int stem_channels = 16;
  std::array<int, 4> stage_blocks{2, 2, 2, 2};
  Int3 input_shape{64, 64, 12};
  friend bool operator==(const ClsNetConfig&, const ClsNetConfig&) = default;
};

/// Throws ConfigInvalid.
void validate(const SegNetConfig& cfg);
void validate(const ClsNetConfig& cfg);

/// "vnet", "v2net", "v2netcls" (or "vnetcls" for a single encoder with the
/// staging route).
std::string arch_name(const SegNetConfig& cfg);

struct Param {
  std::string name;
  Tensor tensor;
};

/// Ordered, named trainable tensors of one network.
class ParamSet {
 public:
  Tensor& add(std::string name, Tensor t);
  const std::vector<Param>& items() const { return items_; }
  std::vector<Tensor> tensors() const;
  std::size_t scalar_count() const;
  std::vector<NamedTensor> to_named() const;
  /// Copies values in; names, order and shapes must match exactly.
  void load(std::span<const NamedTensor> named);
  void zero_grad();

 private:
  std::vector<Param> items_;
};

struct SegOutput {
  Tensor prob_map;                       // [N,1,X,Y,Z] in [0,1]
  std::optional<Tensor> overall_logits;  // [N,4]
  std::optional<Tensor> t_logits;        // [N,4]
};

/// Encoder(s) / fused bottleneck / decoder segmentation network, optionally
/// with the staging-classification route.
class SegNet {
 public:
  SegNet(const SegNetConfig& cfg, std::uint64_t seed);

  const SegNetConfig& config() const { return cfg_; }
  int modalities() const { return cfg_.dual_encoder ? 2 : 1; }

  /// One [N,1,X,Y,Z] tensor per modality (T1C first). Throws ShapeMismatch on
  /// a wrong modality count or spatial shape.
  SegOutput forward(std::span<const Tensor> modalities) const;
  SegOutput forward(const Tensor& t1c) const;
  SegOutput forward(const Tensor& t1c, const Tensor& t2) const;

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  struct Layers;

 private:
  SegNetConfig cfg_;
  ParamSet params_;
  std::shared_ptr<const Layers> layers_;
};

SegNet build_v2netcls(SegNetConfig cfg, std::uint64_t seed);
SegNet build_vnet_t1c(SegNetConfig cfg, std::uint64_t seed);
SegNet build_v2net(SegNetConfig cfg, std::uint64_t seed);
/// Builder chosen by arch name ("vnet", "v2net", "v2netcls").
SegNet build_segnet(const std::string& arch, SegNetConfig cfg, std::uint64_t seed);

/// 3-D ResNet-18 with a single progression logit.
class ResNet3d {
 public:
  ResNet3d(const ClsNetConfig& cfg, std::uint64_t seed);

  const ClsNetConfig& config() const { return cfg_; }
  /// x: [N,in_channels,X,Y,Z] -> [N,1].
  Tensor forward(const Tensor& x) const;

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  struct Layers;

 private:
  ClsNetConfig cfg_;
  ParamSet params_;
  std::shared_ptr<const Layers> layers_;
};

ResNet3d build_resnet18_3d(const ClsNetConfig& cfg, std::uint64_t seed);

inline constexpr float kDefaultClsWeight = 0.1f;

/// Dice + lambda * (CE(overall) + CE(t)) when the staging route is present,
/// Dice alone otherwise.
Tensor seg_loss(const SegOutput& out, const Tensor& mask, std::span<const int> overall,
                std::span<const int> t_stage, float lambda = kDefaultClsWeight);
Tensor seg_loss(const SegOutput& out, const Tensor& mask, int overall, int t_stage,
                float lambda = kDefaultClsWeight);

/// Weights go to `path`; the config (and optional decision threshold) to
/// `path` + ".json".
void save_segnet(const SegNet& net, const std::filesystem::path& path);
SegNet load_segnet(const std::filesystem::path& path);

void save_classifier(const ResNet3d& net, const std::filesystem::path& path,
                     std::optional<double> threshold = std::nullopt);

struct LoadedClassifier {
  ResNet3d net;
  std::optional<double> threshold;
};
LoadedClassifier load_classifier(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

}  // namespace v2nc
