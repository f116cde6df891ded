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

// Functionals are chosen so every true partial derivative is bounded away
// from zero; a relative-error check is meaningless on coordinates whose
// gradient is at the float32 noise floor.

#include "gradient_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "../unit/test_util.hpp"
#include "v2nc/grad_check.hpp"
#include "v2nc/losses.hpp"
#include "v2nc/ops.hpp"

namespace v2nc::testing {
namespace {

// Smooth ops whose functional reduces to a single float use a wider step:
// the float32 rounding of the scalar output dominates at 1e-3.
inline constexpr double kSmoothEps = 1e-2;

struct Case {
  TensorFn fn;
  std::vector<Tensor> inputs;
  double eps = 1e-3;
};

using CaseFactory = std::function<Case(std::mt19937_64&)>;

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::vector<float> rademacher(std::mt19937_64& rng, std::size_t n) {
  std::bernoulli_distribution coin(0.5);
  std::vector<float> s(n);
  for (auto& v : s) v = coin(rng) ? 1.0f : -1.0f;
  return s;
}

struct ConvShape {
  Shape x, w;
  Int3 stride, pad;
};

ConvShape random_conv_shape(std::mt19937_64& rng) {
  for (;;) {
    const int n = pick(rng, 1, 2), cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
    Int3 in{}, k{}, stride{}, pad{};
    bool ok = true;
    for (int a = 0; a < 3; ++a) {
      in[a] = pick(rng, 2, 5);
      k[a] = pick(rng, 1, 3);
      stride[a] = pick(rng, 1, 2);
      pad[a] = pick(rng, 0, k[a] / 2);
      ok = ok && conv_out_extent(in[a], k[a], stride[a], pad[a]) >= 1;
    }
    if (ok) return {{n, cin, in[0], in[1], in[2]}, {cout, cin, k[0], k[1], k[2]}, stride, pad};
  }
}

Case conv_case(std::mt19937_64& rng) {
  const auto s = random_conv_shape(rng);
  Case c;
  c.inputs = {random_tensor(rng, s.x, 0.25f, 1.25f, true), random_tensor(rng, s.w, 0.25f, 1.25f, true),
              random_tensor(rng, {s.w[0]}, -0.5f, 0.5f, true)};
  c.fn = [s](const std::vector<Tensor>& in) { return conv3d(in[0], in[1], in[2], s.stride, s.pad); };
  return c;
}

Case conv_transpose_case(std::mt19937_64& rng) {
  const auto s = random_conv_shape(rng);
  // Feed the transpose a tensor shaped like the forward conv's output.
  Shape y = s.x;
  y[1] = s.w[0];
  for (int a = 0; a < 3; ++a) y[2 + a] = conv_out_extent(s.x[2 + a], s.w[2 + a], s.stride[a], s.pad[a]);
  Case c;
  c.inputs = {random_tensor(rng, y, 0.25f, 1.25f, true), random_tensor(rng, s.w, 0.25f, 1.25f, true),
              random_tensor(rng, {s.w[1]}, -0.5f, 0.5f, true)};
  c.fn = [s](const std::vector<Tensor>& in) { return conv3d_transpose(in[0], in[1], in[2], s.stride, s.pad); };
  return c;
}

Case downsample_case(std::mt19937_64& rng) {
  const int n = pick(rng, 1, 2), cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
  Int3 k{pick(rng, 1, 2), pick(rng, 1, 2), pick(rng, 1, 2)};
  const Shape x{n, cin, k[0] * pick(rng, 1, 3), k[1] * pick(rng, 1, 3), k[2] * pick(rng, 1, 3)};
  Case c;
  c.inputs = {random_tensor(rng, x, 0.25f, 1.25f, true),
              random_tensor(rng, {cout, cin, k[0], k[1], k[2]}, 0.25f, 1.25f, true),
              random_tensor(rng, {cout}, -0.5f, 0.5f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return downsample_conv(in[0], in[1], in[2]); };
  return c;
}

Shape random_feature_shape(std::mt19937_64& rng, int min_spatial = 1) {
  return {pick(rng, 1, 2), pick(rng, 1, 3), pick(rng, std::max(min_spatial, 2), 4), pick(rng, 2, 4),
          pick(rng, 2, 3)};
}

Case prelu_case(std::mt19937_64& rng) {
  const Shape x = random_feature_shape(rng);
  Case c;
  c.inputs = {random_signed(rng, x, 0.05f, 1.5f, true), random_tensor(rng, {x[1]}, 0.1f, 0.5f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return prelu(in[0], in[1]); };
  return c;
}

// Per-slice weights g = t + alpha + xhat, where t is a Rademacher draw made
// orthogonal to 1 and xhat, redrawn until every |t_i| >= 0.25. Then
// dL/dx = gamma/sigma * t, dL/dbeta = m*alpha and dL/dgamma = sum(xhat^2) are
// all bounded away from zero, and alpha = -gamma/beta keeps L itself near zero.
Case instance_norm_case(std::mt19937_64& rng) {
  const Shape x = random_feature_shape(rng, 3);
  Case c;
  c.eps = kSmoothEps;
  c.inputs = {random_tensor(rng, x, -1.0f, 1.0f, true), random_tensor(rng, {x[1]}, 0.5f, 1.5f, true),
              random_tensor(rng, {x[1]}, 0.5f, 1.0f, true)};
  const auto xv = c.inputs[0].values();
  const auto gv = c.inputs[1].values();
  const auto bv = c.inputs[2].values();
  const std::size_t m = numel(x) / (static_cast<std::size_t>(x[0]) * x[1]);
  std::vector<float> g(numel(x));
  for (int slice = 0; slice < x[0] * x[1]; ++slice) {
    const std::size_t base = slice * m;
    std::vector<double> xhat(m);
    double mu = 0.0, var = 0.0;
    for (std::size_t i = 0; i < m; ++i) mu += xv[base + i];
    mu /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) var += (xv[base + i] - mu) * (xv[base + i] - mu);
    const double sd = std::sqrt(var / static_cast<double>(m));
    double hh = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      xhat[i] = (xv[base + i] - mu) / sd;
      hh += xhat[i] * xhat[i];
    }
    std::vector<double> t(m);
    for (int attempt = 0;; ++attempt) {
      const auto r = rademacher(rng, m);
      double rm = 0.0, rh = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        rm += r[i];
        rh += r[i] * xhat[i];
      }
      rm /= static_cast<double>(m);
      double lo = INFINITY;
      for (std::size_t i = 0; i < m; ++i) {
        t[i] = r[i] - rm - xhat[i] * rh / hh;
        lo = std::min(lo, std::abs(t[i]));
      }
      if (lo >= 0.25 || attempt == 1000) break;
    }
    const int ch = slice % x[1];
    const double alpha = -static_cast<double>(gv[ch]) / bv[ch];
    for (std::size_t i = 0; i < m; ++i) g[base + i] = static_cast<float>(t[i] + alpha + xhat[i]);
  }
  c.fn = [g](const std::vector<Tensor>& in) { return weighted_sum(instance_norm(in[0], in[1], in[2]), g); };
  return c;
}

Case linear_case(std::mt19937_64& rng) {
  const int n = pick(rng, 1, 3), f = pick(rng, 1, 6), o = pick(rng, 1, 4);
  Case c;
  c.inputs = {random_tensor(rng, {n, f}, 0.25f, 1.25f, true), random_tensor(rng, {o, f}, 0.25f, 1.25f, true),
              random_tensor(rng, {o}, -1.0f, 1.0f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return linear(in[0], in[1], in[2]); };
  return c;
}

Case concat_case(std::mt19937_64& rng) {
  Shape a = random_feature_shape(rng), b = a, d = a;
  b[1] = pick(rng, 1, 3);
  d[1] = pick(rng, 1, 2);
  Case c;
  c.inputs = {random_tensor(rng, a, -1.0f, 1.0f, true), random_tensor(rng, b, -1.0f, 1.0f, true),
              random_tensor(rng, d, -1.0f, 1.0f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return concat_channels({in[0], in[1], in[2]}); };
  return c;
}

Case gap_case(std::mt19937_64& rng) {
  Case c;
  c.inputs = {random_tensor(rng, random_feature_shape(rng), -1.0f, 1.0f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return global_avg_pool(in[0]); };
  return c;
}

Case add_case(std::mt19937_64& rng) {
  const Shape x = random_feature_shape(rng);
  Case c;
  c.inputs = {random_tensor(rng, x, -1.0f, 1.0f, true), random_tensor(rng, x, -1.0f, 1.0f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return add_residual(in[0], in[1]); };
  return c;
}

Case mul_case(std::mt19937_64& rng) {
  const Shape x = random_feature_shape(rng);
  Case c;
  c.inputs = {random_tensor(rng, x, 0.25f, 1.25f, true), random_tensor(rng, x, 0.25f, 1.25f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return mul(in[0], in[1]); };
  return c;
}

Case scale_case(std::mt19937_64& rng) {
  const float f = std::uniform_real_distribution<float>(-2.0f, 2.0f)(rng);
  Case c;
  c.inputs = {random_tensor(rng, random_feature_shape(rng), -1.0f, 1.0f, true)};
  c.fn = [f](const std::vector<Tensor>& in) { return scale(in[0], f); };
  return c;
}

Case sum_case(std::mt19937_64& rng) {
  Case c;
  c.eps = kSmoothEps;
  c.inputs = {random_tensor(rng, random_feature_shape(rng), -1.0f, 1.0f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return sum(in[0]); };
  return c;
}

Case mean_case(std::mt19937_64& rng) {
  Case c;
  c.eps = kSmoothEps;
  c.inputs = {random_tensor(rng, random_feature_shape(rng), -1.0f, 1.0f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return mean(in[0]); };
  return c;
}

Case reshape_case(std::mt19937_64& rng) {
  const Shape x = random_feature_shape(rng);
  const Shape flat{x[0], static_cast<int>(numel(x) / x[0])};
  Case c;
  c.inputs = {random_tensor(rng, x, -1.0f, 1.0f, true)};
  c.fn = [flat](const std::vector<Tensor>& in) { return reshape(in[0], flat); };
  return c;
}

Case weighted_sum_case(std::mt19937_64& rng) {
  const Shape x = random_feature_shape(rng);
  const auto w = rademacher(rng, numel(x));
  Case c;
  c.eps = kSmoothEps;
  c.inputs = {random_tensor(rng, x, -1.0f, 1.0f, true)};
  c.fn = [w](const std::vector<Tensor>& in) { return weighted_sum(in[0], w); };
  return c;
}

Case sigmoid_case(std::mt19937_64& rng) {
  Case c;
  c.eps = kSmoothEps;
  c.inputs = {random_tensor(rng, random_feature_shape(rng), -2.0f, 2.0f, true)};
  c.fn = [](const std::vector<Tensor>& in) { return sigmoid(in[0]); };
  return c;
}

Case softmax_case(std::mt19937_64& rng) {
  const int n = pick(rng, 1, 3), k = 2 * pick(rng, 1, 3);
  Case c;
  c.eps = kSmoothEps;
  c.inputs = {random_tensor(rng, {n, k}, -1.0f, 1.0f, true)};
  // Alternating +-1 weights keep r_k - <p, r> away from zero.
  std::vector<float> r(static_cast<std::size_t>(n) * k);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (i % 2 == 0) ? 1.0f : -1.0f;
  c.fn = [r](const std::vector<Tensor>& in) { return weighted_sum(softmax(in[0]), r); };
  return c;
}

// Small single-channel volumes with predictions leaning towards the target
// keep every partial derivative well above the rounding of the scalar loss.
Case dice_case(std::mt19937_64& rng) {
  const Shape x{1, 1, pick(rng, 2, 4), pick(rng, 2, 3), pick(rng, 2, 3)};
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<float> fg(0.6f, 0.95f), bg(0.1f, 0.4f);
  std::vector<float> g(numel(x)), p(numel(x));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = (i == 0 || coin(rng)) ? 1.0f : 0.0f;
    p[i] = g[i] > 0.5f ? fg(rng) : bg(rng);
  }
  const Tensor target = Tensor::from(x, g);
  Case c;
  c.eps = kSmoothEps;
  c.inputs = {Tensor::from(x, p, true)};
  c.fn = [target](const std::vector<Tensor>& in) { return soft_dice_loss(in[0], target); };
  return c;
}

Case bce_case(std::mt19937_64& rng) {
  const int n = pick(rng, 1, 6);
  std::vector<int> labels(n);
  for (auto& l : labels) l = pick(rng, 0, 1);
  const float wp = std::uniform_real_distribution<float>(0.5f, 4.0f)(rng);
  const float wn = std::uniform_real_distribution<float>(0.5f, 4.0f)(rng);
  Case c;
  c.eps = kSmoothEps;
  c.inputs = {random_tensor(rng, {n, 1}, -3.0f, 3.0f, true)};
  c.fn = [labels, wp, wn](const std::vector<Tensor>& in) { return weighted_bce(in[0], labels, wp, wn); };
  return c;
}

Case cross_entropy_case(std::mt19937_64& rng) {
  const int n = pick(rng, 1, 4), k = pick(rng, 2, 5);
  std::vector<int> labels(n);
  for (auto& l : labels) l = pick(rng, 0, k - 1);
  Case c;
  c.eps = kSmoothEps;
  c.inputs = {random_tensor(rng, {n, k}, -1.0f, 1.0f, true)};
  c.fn = [labels](const std::vector<Tensor>& in) { return softmax_cross_entropy(in[0], labels); };
  return c;
}

}  // namespace

std::vector<OpGradResult> run_gradient_suite(std::uint64_t seed, int shapes_per_op) {
  const std::vector<std::tuple<std::string, CaseFactory, double>> ops = {
      {"conv3d", conv_case, kConvGradTolerance},
      {"conv3d_transpose", conv_transpose_case, kConvGradTolerance},
      {"downsample_conv", downsample_case, kConvGradTolerance},
      {"prelu", prelu_case, kPointwiseGradTolerance},
      {"instance_norm", instance_norm_case, kPointwiseGradTolerance},
      {"linear", linear_case, kPointwiseGradTolerance},
      {"concat_channels", concat_case, kPointwiseGradTolerance},
      {"global_avg_pool", gap_case, kPointwiseGradTolerance},
      {"add_residual", add_case, kPointwiseGradTolerance},
      {"mul", mul_case, kPointwiseGradTolerance},
      {"scale", scale_case, kPointwiseGradTolerance},
      {"sum", sum_case, kPointwiseGradTolerance},
      {"mean", mean_case, kPointwiseGradTolerance},
      {"reshape", reshape_case, kPointwiseGradTolerance},
      {"weighted_sum", weighted_sum_case, kPointwiseGradTolerance},
      {"sigmoid", sigmoid_case, kPointwiseGradTolerance},
      {"softmax", softmax_case, kPointwiseGradTolerance},
      {"soft_dice_loss", dice_case, kPointwiseGradTolerance},
      {"weighted_bce", bce_case, kPointwiseGradTolerance},
      {"softmax_cross_entropy", cross_entropy_case, kPointwiseGradTolerance},
  };
  std::vector<OpGradResult> results;
  std::uint64_t stream = 0;
  for (const auto& [name, factory, tol] : ops) {
    OpGradResult r{name, 0.0, tol, 0, ""};
    for (int s = 0; s < shapes_per_op; ++s) {
      std::mt19937_64 rng(seed * 1000003ULL + (++stream));
      Case c = factory(rng);
      const double err = grad_check(c.fn, c.inputs, c.eps);
      ++r.shapes;
      if (err >= r.max_rel_error) {
        r.max_rel_error = err;
        r.worst_shape = shape_str(c.inputs[0].shape());
      }
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace v2nc::testing
