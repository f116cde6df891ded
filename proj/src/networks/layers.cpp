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

#include "layers.hpp"

#include <cmath>
#include <random>

namespace v2nc::layers {

constexpr float kInitialSlope = 0.25f;

Tensor ConvBlock::operator()(const Tensor& x) const {
  Tensor y;
  switch (kind) {
    case ConvKind::kConv:
      y = conv3d(x, w, b, stride, pad);
      break;
    case ConvKind::kDown:
      y = downsample_conv(x, w, b);
      break;
    case ConvKind::kUp:
      y = conv3d_transpose(x, w, b, stride, {0, 0, 0});
      break;
  }
  y = instance_norm(y, gamma, beta);
  return slope.defined() ? prelu(y, slope) : y;
}

Tensor ResidualBlock::operator()(const Tensor& x, const Tensor& skip) const {
  Tensor y = x;
  for (const auto& u : units) y = u(y);
  const Tensor s = shortcut ? (*shortcut)(skip) : skip;
  return prelu(add_residual(y, s), out_slope);
}

Tensor Linear::operator()(const Tensor& x) const { return linear(x, w, b); }

Factory::Factory(ParamSet& params, std::uint64_t seed) : params_(params), rng_(seed) {}

Tensor Factory::he_normal(const std::string& name, Shape shape, int fan_in) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  std::vector<float> v(numel(shape));
  for (auto& x : v) x = static_cast<float>(dist(rng_));
  return params_.add(name, Tensor::from(std::move(shape), std::move(v), true));
}

Tensor Factory::constant(const std::string& name, Shape shape, float value) {
  return params_.add(name, Tensor::full(std::move(shape), value, true));
}

Tensor Factory::prelu_slope(const std::string& name, int channels) {
  return constant(name, {channels}, kInitialSlope);
}

ConvBlock Factory::conv_block(const std::string& name, ConvKind kind, int cin, int cout, Int3 kernel, Int3 stride,
                              Int3 pad, bool activation) {
  ConvBlock c;
  c.kind = kind;
  c.stride = stride;
  c.pad = pad;
  const int kvol = kernel[0] * kernel[1] * kernel[2];
  if (kind == ConvKind::kUp) {
    const int svol = stride[0] * stride[1] * stride[2];
    c.w = he_normal(name + ".w", {cin, cout, kernel[0], kernel[1], kernel[2]}, std::max(1, cin * kvol / svol));
  } else {
    c.w = he_normal(name + ".w", {cout, cin, kernel[0], kernel[1], kernel[2]}, cin * kvol);
  }
  c.b = constant(name + ".b", {cout}, 0.0f);
  c.gamma = constant(name + ".norm.gamma", {cout}, 1.0f);
  c.beta = constant(name + ".norm.beta", {cout}, 0.0f);
  if (activation) c.slope = prelu_slope(name + ".act", cout);
  return c;
}

ResidualBlock Factory::residual_block(const std::string& name, int cin, int cout, int units, Int3 kernel,
                                      Int3 stride, bool projection) {
  ResidualBlock r;
  for (int u = 0; u < units; ++u) {
    const bool last = u + 1 == units;
    r.units.push_back(conv_block(name + ".conv" + std::to_string(u), ConvKind::kConv, u == 0 ? cin : cout, cout,
                                 kernel, u == 0 ? stride : Int3{1, 1, 1}, same_pad(kernel), !last));
  }
  if (projection) {
    r.shortcut = conv_block(name + ".shortcut", ConvKind::kConv, cin, cout, {1, 1, 1}, stride, {0, 0, 0}, false);
  }
  r.out_slope = prelu_slope(name + ".act", cout);
  return r;
}

Linear Factory::linear(const std::string& name, int in, int out) {
  Linear l;
  l.w = he_normal(name + ".w", {out, in}, in);
  l.b = constant(name + ".b", {out}, 0.0f);
  return l;
}

}  // namespace v2nc::layers
