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
#include <string>
#include <vector>

#include "layers.hpp"
#include "v2nc/errors.hpp"
#include "v2nc/losses.hpp"

namespace v2nc {

using layers::ConvBlock;
using layers::ConvKind;
using layers::Linear;
using layers::ResidualBlock;

namespace {

int channels_at(const SegNetConfig& cfg, int level) { return cfg.base_channels << level; }

// Slices are halved only while there are at least four of them.
Int3 down_stride(const Int3& shape) { return {2, 2, shape[2] >= 4 ? 2 : 1}; }

Int3 divide(const Int3& shape, const Int3& stride) {
  return {shape[0] / stride[0], shape[1] / stride[1], shape[2] / stride[2]};
}

long voxels(const Int3& s) { return static_cast<long>(s[0]) * s[1] * s[2]; }

Int3 strided_extent(const Int3& shape, const Int3& stride) {
  return {conv_out_extent(shape[0], 3, stride[0], 1), conv_out_extent(shape[1], 3, stride[1], 1),
          conv_out_extent(shape[2], 3, stride[2], 1)};
}

std::string shape3_str(const Int3& s) {
  return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]);
}

}  // namespace

void validate(const SegNetConfig& cfg) {
  if (cfg.base_channels < 1) throw ConfigInvalid("base_channels must be >= 1");
  if (cfg.depth < 2) throw ConfigInvalid("depth must be >= 2");
  if (cfg.depth > 8) throw ConfigInvalid("depth must be <= 8");
  if (cfg.convs_per_level < 1) throw ConfigInvalid("convs_per_level must be >= 1");
  for (int k : cfg.kernel)
    if (k < 1 || k % 2 == 0) throw ConfigInvalid("kernel extents must be odd and positive");
  if (cfg.cls_route && (cfg.num_overall_classes < 2 || cfg.num_t_classes < 2 || cfg.cls_hidden < 1)) {
    throw ConfigInvalid("staging heads need >= 2 classes and a positive hidden width");
  }
  Int3 shape = cfg.input_shape;
  for (int a = 0; a < 3; ++a)
    if (shape[a] < 1) throw ConfigInvalid("input_shape must be positive");
  for (int l = 0; l < cfg.depth; ++l) {
    const Int3 s = down_stride(shape);
    for (int a = 0; a < 3; ++a) {
      if (shape[a] % s[a] != 0) {
        throw ConfigInvalid("input_shape " + shape3_str(cfg.input_shape) + " is not divisible at level " +
                            std::to_string(l) + " (" + shape3_str(shape) + ")");
      }
    }
    shape = divide(shape, s);
  }
  if (voxels(shape) < 2) throw ConfigInvalid("bottleneck " + shape3_str(shape) + " is too small to normalise");
  if (cfg.cls_route && voxels(strided_extent(shape, down_stride(shape))) < 2) {
    throw ConfigInvalid("staging route input " + shape3_str(shape) + " is too small to normalise");
  }
}

std::string arch_name(const SegNetConfig& cfg) {
  if (cfg.dual_encoder) return cfg.cls_route ? "v2netcls" : "v2net";
  return cfg.cls_route ? "vnetcls" : "vnet";
}

struct SegNet::Layers {
  struct Encoder {
    ConvBlock stem;
    std::vector<ResidualBlock> blocks;  // one per level; outputs are the skips
    std::vector<ConvBlock> downs;
  };
  struct DecoderLevel {
    ConvBlock up;
    ResidualBlock block;
  };
  std::vector<Encoder> encoders;
  std::optional<ConvBlock> fuse;
  ResidualBlock bottleneck;
  std::vector<DecoderLevel> decoder;  // deepest level first
  Tensor head_w, head_b;  // 1x1x1 conv, no norm
  struct Staging {
    ConvBlock conv;
    Linear hidden;
    Tensor hidden_slope;
    Linear overall, t;
  };
  std::optional<Staging> staging;
};

SegNet::SegNet(const SegNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  validate(cfg_);
  auto L = std::make_shared<Layers>();
  layers::Factory f(params_, derive_seed(seed, SeedStream::kInit));
  const Int3 k = cfg_.kernel;
  const Int3 pad = layers::same_pad(k);
  const int depth = cfg_.depth;

  std::vector<Int3> strides;
  Int3 shape = cfg_.input_shape;
  for (int l = 0; l < depth; ++l) {
    strides.push_back(down_stride(shape));
    shape = divide(shape, strides.back());
  }

  for (int e = 0; e < modalities(); ++e) {
    const std::string p = "enc" + std::to_string(e);
    Layers::Encoder enc;
    enc.stem = f.conv_block(p + ".stem", ConvKind::kConv, 1, channels_at(cfg_, 0), k, {1, 1, 1}, pad, true);
    for (int l = 0; l < depth; ++l) {
      const int c = channels_at(cfg_, l);
      const std::string q = p + ".level" + std::to_string(l);
      enc.blocks.push_back(f.residual_block(q + ".block", c, c, cfg_.convs_per_level, k, {1, 1, 1}, false));
      enc.downs.push_back(
          f.conv_block(q + ".down", ConvKind::kDown, c, channels_at(cfg_, l + 1), strides[l], strides[l], {0, 0, 0},
                       true));
    }
    L->encoders.push_back(std::move(enc));
  }

  const int cd = channels_at(cfg_, depth);
  if (modalities() > 1) {
    L->fuse = f.conv_block("fuse", ConvKind::kConv, cd * modalities(), cd, {1, 1, 1}, {1, 1, 1}, {0, 0, 0}, true);
  }
  L->bottleneck = f.residual_block("bottleneck", cd, cd, cfg_.convs_per_level, k, {1, 1, 1}, false);

  for (int l = depth - 1; l >= 0; --l) {
    const int c = channels_at(cfg_, l);
    const std::string q = "dec.level" + std::to_string(l);
    Layers::DecoderLevel d;
    d.up = f.conv_block(q + ".up", ConvKind::kUp, channels_at(cfg_, l + 1), c, strides[l], strides[l], {0, 0, 0}, true);
    d.block = f.residual_block(q + ".block", c * (1 + modalities()), c, cfg_.convs_per_level, k, {1, 1, 1}, false);
    L->decoder.push_back(std::move(d));
  }

  const int c0 = channels_at(cfg_, 0);
  L->head_w = f.he_normal("head.w", {1, c0, 1, 1, 1}, c0);
  L->head_b = f.constant("head.b", {1}, 0.0f);

  if (cfg_.cls_route) {
    Layers::Staging s;
    s.conv = f.conv_block("cls.conv", ConvKind::kConv, cd, cd, {3, 3, 3}, down_stride(shape), {1, 1, 1}, true);
    s.hidden = f.linear("cls.hidden", cd, cfg_.cls_hidden);
    s.hidden_slope = f.prelu_slope("cls.hidden.act", cfg_.cls_hidden);
    s.overall = f.linear("cls.overall", cfg_.cls_hidden, cfg_.num_overall_classes);
    s.t = f.linear("cls.t", cfg_.cls_hidden, cfg_.num_t_classes);
    L->staging = std::move(s);
  }
  layers_ = std::move(L);
}

SegOutput SegNet::forward(std::span<const Tensor> inputs) const {
  if (static_cast<int>(inputs.size()) != modalities()) {
    throw ShapeMismatch(arch_name(cfg_) + " expects " + std::to_string(modalities()) + " modalities, got " +
                        std::to_string(inputs.size()));
  }
  const Shape& s0 = inputs[0].shape();
  for (const auto& x : inputs) {
    const Shape& s = x.shape();
    if (s.size() != 5 || s[1] != 1 || s[0] != s0[0] || s[2] != cfg_.input_shape[0] || s[3] != cfg_.input_shape[1] ||
        s[4] != cfg_.input_shape[2]) {
      throw ShapeMismatch(arch_name(cfg_) + " expects [N,1," + shape3_str(cfg_.input_shape) + "] inputs, got " +
                          shape_str(s));
    }
  }
  const Layers& L = *layers_;
  const int depth = cfg_.depth;

  std::vector<std::vector<Tensor>> skips(L.encoders.size());
  std::vector<Tensor> bottoms;
  for (std::size_t e = 0; e < L.encoders.size(); ++e) {
    const auto& enc = L.encoders[e];
    Tensor h = enc.stem(inputs[e]);
    for (int l = 0; l < depth; ++l) {
      h = enc.blocks[l](h);
      skips[e].push_back(h);
      h = enc.downs[l](h);
    }
    bottoms.push_back(h);
  }
  Tensor h = L.fuse ? (*L.fuse)(concat_channels(bottoms)) : bottoms[0];
  h = L.bottleneck(h);
  const Tensor fused = h;

  for (int i = 0; i < depth; ++i) {
    const int l = depth - 1 - i;
    const auto& d = L.decoder[i];
    const Tensor up = d.up(h);
    std::vector<Tensor> parts{up};
    for (const auto& sk : skips) parts.push_back(sk[l]);
    h = d.block(concat_channels(parts), up);
  }

  SegOutput out;
  out.prob_map = sigmoid(conv3d(h, L.head_w, L.head_b));
  if (L.staging) {
    const auto& s = *L.staging;
    Tensor z = global_avg_pool(s.conv(fused));
    z = prelu(s.hidden(z), s.hidden_slope);
    out.overall_logits = s.overall(z);
    out.t_logits = s.t(z);
  }
  return out;
}

SegOutput SegNet::forward(const Tensor& t1c) const { return forward(std::span<const Tensor>(&t1c, 1)); }

SegOutput SegNet::forward(const Tensor& t1c, const Tensor& t2) const {
  const Tensor xs[2] = {t1c, t2};
  return forward(std::span<const Tensor>(xs, 2));
}

SegNet build_v2netcls(SegNetConfig cfg, std::uint64_t seed) {
  cfg.dual_encoder = true;
  cfg.cls_route = true;
  return SegNet(cfg, seed);
}

SegNet build_vnet_t1c(SegNetConfig cfg, std::uint64_t seed) {
  cfg.dual_encoder = false;
  cfg.cls_route = false;
  return SegNet(cfg, seed);
}

SegNet build_v2net(SegNetConfig cfg, std::uint64_t seed) {
  cfg.dual_encoder = true;
  cfg.cls_route = false;
  return SegNet(cfg, seed);
}

SegNet build_segnet(const std::string& arch, SegNetConfig cfg, std::uint64_t seed) {
  if (arch == "v2netcls") return build_v2netcls(cfg, seed);
  if (arch == "v2net") return build_v2net(cfg, seed);
  if (arch == "vnet") return build_vnet_t1c(cfg, seed);
  throw ConfigInvalid("unknown architecture \"" + arch + "\" (expected vnet, v2net or v2netcls)");
}

Tensor seg_loss(const SegOutput& out, const Tensor& mask, std::span<const int> overall, std::span<const int> t_stage,
                float lambda) {
  Tensor loss = soft_dice_loss(out.prob_map, mask);
  if (out.overall_logits && out.t_logits && lambda != 0.0f) {
    const Tensor ce = add(softmax_cross_entropy(*out.overall_logits, overall),
                          softmax_cross_entropy(*out.t_logits, t_stage));
    loss = add(loss, scale(ce, lambda));
  }
  return loss;
}

Tensor seg_loss(const SegOutput& out, const Tensor& mask, int overall, int t_stage, float lambda) {
  return seg_loss(out, mask, std::span<const int>(&overall, 1), std::span<const int>(&t_stage, 1), lambda);
}

}  // namespace v2nc
