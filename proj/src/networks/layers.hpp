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

// Building blocks shared by the segmentation and classification networks.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "v2nc/networks.hpp"
#include "v2nc/rng.hpp"

namespace v2nc::layers {

enum class ConvKind { kConv, kDown, kUp };

/// conv -> instance norm -> PReLU (the activation is optional).
struct ConvBlock {
  ConvKind kind = ConvKind::kConv;
  Tensor w, b, gamma, beta, slope;
  Int3 stride{1, 1, 1};
  Int3 pad{0, 0, 0};

  Tensor operator()(const Tensor& x) const;
};

/// Units of ConvBlock whose last unit has no activation, a shortcut (identity
/// or 1x1x1 conv + norm), the sum, then PReLU.
struct ResidualBlock {
  std::vector<ConvBlock> units;
  std::optional<ConvBlock> shortcut;
  Tensor out_slope;

  Tensor operator()(const Tensor& x) const { return (*this)(x, x); }
  /// Main path from `x`, shortcut from `skip`.
  Tensor operator()(const Tensor& x, const Tensor& skip) const;
};

struct Linear {
  Tensor w, b;
  Tensor operator()(const Tensor& x) const;
};

/// Registers parameters in creation order and draws He-normal weights from
/// one seeded stream.
class Factory {
 public:
  Factory(ParamSet& params, std::uint64_t seed);

  ConvBlock conv_block(const std::string& name, ConvKind kind, int cin, int cout, Int3 kernel, Int3 stride,
                       Int3 pad, bool activation);
  /// `units` convs of `kernel`; the first maps cin -> cout, the rest cout -> cout.
  ResidualBlock residual_block(const std::string& name, int cin, int cout, int units, Int3 kernel, Int3 stride,
                               bool projection);
  Linear linear(const std::string& name, int in, int out);
  Tensor prelu_slope(const std::string& name, int channels);

  Tensor he_normal(const std::string& name, Shape shape, int fan_in);
  Tensor constant(const std::string& name, Shape shape, float value);

 private:
  ParamSet& params_;
  Rng rng_;
};

inline Int3 same_pad(Int3 kernel) { return {kernel[0] / 2, kernel[1] / 2, kernel[2] / 2}; }

}  // namespace v2nc::layers
