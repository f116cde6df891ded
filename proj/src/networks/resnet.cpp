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

#include <string>
#include <vector>

#include "layers.hpp"
#include "v2nc/errors.hpp"

namespace v2nc {

using layers::ConvBlock;
using layers::ConvKind;
using layers::Linear;
using layers::ResidualBlock;

namespace {

constexpr std::array<int, 4> kResNet18Blocks{2, 2, 2, 2};
constexpr Int3 kStemStride{2, 2, 1};

Int3 stage_stride(const Int3& shape) { return {2, 2, shape[2] >= 4 ? 2 : 1}; }

Int3 after_conv3(const Int3& shape, const Int3& stride) {
  return {conv_out_extent(shape[0], 3, stride[0], 1), conv_out_extent(shape[1], 3, stride[1], 1),
          conv_out_extent(shape[2], 3, stride[2], 1)};
}

// Spatial extent entering each stage, then the final one.
std::vector<Int3> stage_shapes(const ClsNetConfig& cfg) {
  std::vector<Int3> out;
  Int3 s = after_conv3(cfg.input_shape, kStemStride);
  for (int stage = 0; stage < 4; ++stage) {
    out.push_back(s);
    s = after_conv3(s, stage_stride(s));
  }
  out.push_back(s);
  return out;
}

}  // namespace

void validate(const ClsNetConfig& cfg) {
  if (cfg.in_channels < 1) throw ConfigInvalid("in_channels must be >= 1");
  if (cfg.stem_channels < 1) throw ConfigInvalid("stem_channels must be >= 1");
  if (cfg.stage_blocks != kResNet18Blocks) throw ConfigInvalid("stage_blocks must be the ResNet-18 layout (2,2,2,2)");
  for (int a = 0; a < 3; ++a)
    if (cfg.input_shape[a] < 1) throw ConfigInvalid("input_shape must be positive");
  const Int3 last = stage_shapes(cfg).back();
  if (static_cast<long>(last[0]) * last[1] * last[2] < 2) {
    throw ConfigInvalid("input_shape is too small for four strided stages");
  }
}

struct ResNet3d::Layers {
  ConvBlock stem;
  std::vector<ResidualBlock> blocks;
  Linear head;
};

ResNet3d::ResNet3d(const ClsNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  validate(cfg_);
  auto L = std::make_shared<Layers>();
  layers::Factory f(params_, derive_seed(seed, SeedStream::kInit));
  L->stem = f.conv_block("stem", ConvKind::kConv, cfg_.in_channels, cfg_.stem_channels, {3, 3, 3}, kStemStride,
                         {1, 1, 1}, true);
  const auto shapes = stage_shapes(cfg_);
  int cin = cfg_.stem_channels;
  for (int stage = 0; stage < 4; ++stage) {
    const int cout = cfg_.stem_channels << stage;
    for (int b = 0; b < cfg_.stage_blocks[stage]; ++b) {
      const Int3 stride = b == 0 ? stage_stride(shapes[stage]) : Int3{1, 1, 1};
      const bool projection = cin != cout || stride != Int3{1, 1, 1};
      L->blocks.push_back(f.residual_block("stage" + std::to_string(stage) + ".block" + std::to_string(b), cin, cout,
                                           2, {3, 3, 3}, stride, projection));
      cin = cout;
    }
  }
  L->head = f.linear("head", cin, 1);
  layers_ = std::move(L);
}

Tensor ResNet3d::forward(const Tensor& x) const {
  const Shape& s = x.shape();
  if (s.size() != 5 || s[1] != cfg_.in_channels || s[2] != cfg_.input_shape[0] || s[3] != cfg_.input_shape[1] ||
      s[4] != cfg_.input_shape[2]) {
    throw ShapeMismatch("classifier expects [N," + std::to_string(cfg_.in_channels) + "," +
                        std::to_string(cfg_.input_shape[0]) + "," + std::to_string(cfg_.input_shape[1]) + "," +
                        std::to_string(cfg_.input_shape[2]) + "], got " + shape_str(s));
  }
  const Layers& L = *layers_;
  Tensor h = L.stem(x);
  for (const auto& b : L.blocks) h = b(h);
  return L.head(global_avg_pool(h));
}

ResNet3d build_resnet18_3d(const ClsNetConfig& cfg, std::uint64_t seed) { return ResNet3d(cfg, seed); }

}  // namespace v2nc
