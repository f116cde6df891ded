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

#include "node.hpp"
#include "v2nc/errors.hpp"
#include "v2nc/ops.hpp"

namespace v2nc {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                        shape_str(b.shape()) + " differ");
  }
}

void require_channel_vector(const Tensor& p, int channels, const char* op, const char* what) {
  if (p.ndim() != 1 || p.dim(0) != channels) {
    throw ShapeMismatch(std::string(op) + ": " + what + " shape " + shape_str(p.shape()) +
                        " does not match " + std::to_string(channels) + " channels");
  }
}

// Layout helper for [N, C, ...] tensors.
struct ChannelLayout {
  int n = 0;
  int c = 0;
  long inner = 0;
};

ChannelLayout channel_layout(const Tensor& x, const char* op) {
  if (x.ndim() < 2) throw ShapeMismatch(std::string(op) + ": need at least 2 dims, got " + shape_str(x.shape()));
  ChannelLayout l{x.dim(0), x.dim(1), 1};
  for (int i = 2; i < x.ndim(); ++i) l.inner *= x.dim(i);
  return l;
}

}  // namespace

Tensor prelu(const Tensor& x, const Tensor& slope) {
  const auto l = channel_layout(x, "prelu");
  require_channel_vector(slope, l.c, "prelu", "slope");
  const auto xv = x.values();
  const auto av = slope.values();
  std::vector<float> out(xv.size());
  for (int s = 0; s < l.n; ++s)
    for (int ch = 0; ch < l.c; ++ch) {
      const long base = (static_cast<long>(s) * l.c + ch) * l.inner;
      const float a = av[ch];
      for (long i = 0; i < l.inner; ++i) {
        const float v = xv[base + i];
        out[base + i] = v >= 0.0f ? v : a * v;
      }
    }
  return detail::make_result(x.shape(), std::move(out), {x, slope},
                             [l](detail::Node& self, std::span<const float> dout) {
                               const auto xv = self.input_value(0);
                               const auto av = self.input_value(1);
                               auto dx = self.input_grad(0);
                               auto da = self.input_grad(1);
                               for (int s = 0; s < l.n; ++s)
                                 for (int ch = 0; ch < l.c; ++ch) {
                                   const long base = (static_cast<long>(s) * l.c + ch) * l.inner;
                                   const float a = av[ch];
                                   double acc = 0.0;
                                   for (long i = 0; i < l.inner; ++i) {
                                     const float v = xv[base + i];
                                     const float g = dout[base + i];
                                     if (v >= 0.0f) {
                                       if (!dx.empty()) dx[base + i] += g;
                                     } else {
                                       if (!dx.empty()) dx[base + i] += a * g;
                                       acc += static_cast<double>(g) * v;
                                     }
                                   }
                                   if (!da.empty()) da[ch] += static_cast<float>(acc);
                                 }
                             });
}

Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  const auto l = channel_layout(x, "instance_norm");
  require_channel_vector(gamma, l.c, "instance_norm", "gamma");
  require_channel_vector(beta, l.c, "instance_norm", "beta");
  if (l.inner < 2) throw ShapeMismatch("instance_norm: spatial size must be >= 2, got " + shape_str(x.shape()));

  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<float> out(xv.size());
  std::vector<float> xhat(xv.size());
  std::vector<float> inv_std(static_cast<std::size_t>(l.n) * l.c);
  for (int s = 0; s < l.n; ++s)
    for (int ch = 0; ch < l.c; ++ch) {
      const long slice = static_cast<long>(s) * l.c + ch;
      const long base = slice * l.inner;
      double sum = 0.0;
      for (long i = 0; i < l.inner; ++i) sum += xv[base + i];
      const double mu = sum / static_cast<double>(l.inner);
      double sq = 0.0;
      for (long i = 0; i < l.inner; ++i) {
        const double d = xv[base + i] - mu;
        sq += d * d;
      }
      const double inv = 1.0 / std::sqrt(sq / static_cast<double>(l.inner) + eps);
      inv_std[slice] = static_cast<float>(inv);
      for (long i = 0; i < l.inner; ++i) {
        const float h = static_cast<float>((xv[base + i] - mu) * inv);
        xhat[base + i] = h;
        out[base + i] = gv[ch] * h + bv[ch];
      }
    }

  return detail::make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [l, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self,
                                                               std::span<const float> dout) {
        const auto gv = self.input_value(1);
        auto dx = self.input_grad(0);
        auto dg = self.input_grad(1);
        auto db = self.input_grad(2);
        const double m = static_cast<double>(l.inner);
        for (int ch = 0; ch < l.c; ++ch) {
          double gsum = 0.0, bsum = 0.0;
          for (int s = 0; s < l.n; ++s) {
            const long slice = static_cast<long>(s) * l.c + ch;
            const long base = slice * l.inner;
            double sdy = 0.0, sdyx = 0.0;
            for (long i = 0; i < l.inner; ++i) {
              sdy += dout[base + i];
              sdyx += static_cast<double>(dout[base + i]) * xhat[base + i];
            }
            gsum += sdyx;
            bsum += sdy;
            if (!dx.empty()) {
              const double k = static_cast<double>(gv[ch]) * inv_std[slice] / m;
              for (long i = 0; i < l.inner; ++i) {
                dx[base + i] += static_cast<float>(k * (m * dout[base + i] - sdy - xhat[base + i] * sdyx));
              }
            }
          }
          if (!dg.empty()) dg[ch] += static_cast<float>(gsum);
          if (!db.empty()) db[ch] += static_cast<float>(bsum);
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || w.dim(1) != x.dim(1)) {
    throw ShapeMismatch("linear: x " + shape_str(x.shape()) + " incompatible with w " + shape_str(w.shape()));
  }
  const int n = x.dim(0), f = x.dim(1), o = w.dim(0);
  if (b.defined()) require_channel_vector(b, o, "linear", "bias");
  const auto xv = x.values(), wv = w.values();
  std::vector<float> out(static_cast<std::size_t>(n) * o);
  for (int s = 0; s < n; ++s)
    for (int r = 0; r < o; ++r) {
      double acc = b.defined() ? b.values()[r] : 0.0;
      for (int k = 0; k < f; ++k) acc += static_cast<double>(xv[s * f + k]) * wv[r * f + k];
      out[s * o + r] = static_cast<float>(acc);
    }
  return detail::make_result({n, o}, std::move(out), {x, w, b},
                             [n, f, o](detail::Node& self, std::span<const float> dout) {
                               const auto xv = self.input_value(0), wv = self.input_value(1);
                               auto dx = self.input_grad(0);
                               auto dw = self.input_grad(1);
                               auto db = self.input_grad(2);
                               if (!dx.empty()) {
                                 for (int s = 0; s < n; ++s)
                                   for (int k = 0; k < f; ++k) {
                                     double acc = 0.0;
                                     for (int r = 0; r < o; ++r) acc += static_cast<double>(dout[s * o + r]) * wv[r * f + k];
                                     dx[s * f + k] += static_cast<float>(acc);
                                   }
                               }
                               if (!dw.empty()) {
                                 for (int r = 0; r < o; ++r)
                                   for (int k = 0; k < f; ++k) {
                                     double acc = 0.0;
                                     for (int s = 0; s < n; ++s) acc += static_cast<double>(dout[s * o + r]) * xv[s * f + k];
                                     dw[r * f + k] += static_cast<float>(acc);
                                   }
                               }
                               if (!db.empty()) {
                                 for (int r = 0; r < o; ++r) {
                                   double acc = 0.0;
                                   for (int s = 0; s < n; ++s) acc += dout[s * o + r];
                                   db[r] += static_cast<float>(acc);
                                 }
                               }
                             });
}

Tensor concat_channels(std::span<const Tensor> xs) {
  if (xs.empty()) throw ShapeMismatch("concat_channels: no inputs");
  const auto first = channel_layout(xs[0], "concat_channels");
  std::vector<int> channels;
  int total = 0;
  for (const auto& t : xs) {
    const auto l = channel_layout(t, "concat_channels");
    Shape a = t.shape(), b = xs[0].shape();
    a[1] = b[1] = 0;
    if (a != b) {
      throw ShapeMismatch("concat_channels: " + shape_str(t.shape()) + " vs " + shape_str(xs[0].shape()));
    }
    channels.push_back(l.c);
    total += l.c;
  }
  Shape shape = xs[0].shape();
  shape[1] = total;
  const long inner = first.inner;
  const int n = first.n;
  std::vector<float> out(numel(shape));
  for (int s = 0; s < n; ++s) {
    long offset = static_cast<long>(s) * total * inner;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const long block = static_cast<long>(channels[t]) * inner;
      const auto v = xs[t].values();
      std::copy_n(v.data() + s * block, block, out.data() + offset);
      offset += block;
    }
  }
  std::vector<Tensor> inputs(xs.begin(), xs.end());
  return detail::make_result(std::move(shape), std::move(out), std::move(inputs),
                             [n, total, inner, channels](detail::Node& self, std::span<const float> dout) {
                               long cstart = 0;
                               for (std::size_t t = 0; t < channels.size(); ++t) {
                                 auto dx = self.input_grad(t);
                                 const long block = static_cast<long>(channels[t]) * inner;
                                 if (!dx.empty()) {
                                   for (int s = 0; s < n; ++s) {
                                     const float* src = dout.data() + (static_cast<long>(s) * total + cstart) * inner;
                                     float* dst = dx.data() + s * block;
                                     for (long i = 0; i < block; ++i) dst[i] += src[i];
                                   }
                                 }
                                 cstart += channels[t];
                               }
                             });
}

Tensor concat_channels(std::initializer_list<Tensor> xs) {
  return concat_channels(std::span<const Tensor>(xs.begin(), xs.size()));
}

Tensor global_avg_pool(const Tensor& x) {
  const auto l = channel_layout(x, "global_avg_pool");
  const auto xv = x.values();
  std::vector<float> out(static_cast<std::size_t>(l.n) * l.c);
  for (long slice = 0; slice < static_cast<long>(out.size()); ++slice) {
    double acc = 0.0;
    for (long i = 0; i < l.inner; ++i) acc += xv[slice * l.inner + i];
    out[slice] = static_cast<float>(acc / static_cast<double>(l.inner));
  }
  return detail::make_result({l.n, l.c}, std::move(out), {x},
                             [l](detail::Node& self, std::span<const float> dout) {
                               auto dx = self.input_grad(0);
                               const float k = 1.0f / static_cast<float>(l.inner);
                               for (long slice = 0; slice < static_cast<long>(dout.size()); ++slice) {
                                 const float g = dout[slice] * k;
                                 for (long i = 0; i < l.inner; ++i) dx[slice * l.inner + i] += g;
                               }
                             });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto av = a.values(), bv = b.values();
  std::vector<float> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return detail::make_result(a.shape(), std::move(out), {a, b},
                             [](detail::Node& self, std::span<const float> dout) {
                               for (std::size_t k = 0; k < 2; ++k) {
                                 auto d = self.input_grad(k);
                                 for (std::size_t i = 0; i < d.size(); ++i) d[i] += dout[i];
                               }
                             });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto av = a.values(), bv = b.values();
  std::vector<float> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return detail::make_result(a.shape(), std::move(out), {a, b},
                             [](detail::Node& self, std::span<const float> dout) {
                               const auto av = self.input_value(0), bv = self.input_value(1);
                               auto da = self.input_grad(0);
                               auto db = self.input_grad(1);
                               for (std::size_t i = 0; i < da.size(); ++i) da[i] += dout[i] * bv[i];
                               for (std::size_t i = 0; i < db.size(); ++i) db[i] += dout[i] * av[i];
                             });
}

Tensor scale(const Tensor& a, float factor) {
  const auto av = a.values();
  std::vector<float> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  return detail::make_result(a.shape(), std::move(out), {a},
                             [factor](detail::Node& self, std::span<const float> dout) {
                               auto d = self.input_grad(0);
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] += dout[i] * factor;
                             });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (float v : a.values()) acc += v;
  return detail::make_result({1}, {static_cast<float>(acc)}, {a},
                             [](detail::Node& self, std::span<const float> dout) {
                               auto d = self.input_grad(0);
                               for (float& v : d) v += dout[0];
                             });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0f / static_cast<float>(a.numel())); }

Tensor sigmoid(const Tensor& x) {
  const auto xv = x.values();
  std::vector<float> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float v = xv[i];
    // Branch on sign so exp never overflows.
    if (v >= 0.0f) {
      out[i] = 1.0f / (1.0f + std::exp(-v));
    } else {
      const float e = std::exp(v);
      out[i] = e / (1.0f + e);
    }
  }
  return detail::make_result(x.shape(), out, {x},
                             [out](detail::Node& self, std::span<const float> dout) {
                               auto d = self.input_grad(0);
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] += dout[i] * out[i] * (1.0f - out[i]);
                             });
}

Tensor softmax(const Tensor& x) {
  if (x.ndim() != 2) throw ShapeMismatch("softmax: expected [N,K], got " + shape_str(x.shape()));
  const int n = x.dim(0), k = x.dim(1);
  const auto xv = x.values();
  std::vector<float> out(xv.size());
  for (int s = 0; s < n; ++s) {
    const float* row = xv.data() + s * k;
    const float mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
    for (int j = 0; j < k; ++j) out[s * k + j] = static_cast<float>(std::exp(static_cast<double>(row[j]) - mx) / z);
  }
  return detail::make_result(x.shape(), out, {x},
                             [out, n, k](detail::Node& self, std::span<const float> dout) {
                               auto d = self.input_grad(0);
                               for (int s = 0; s < n; ++s) {
                                 double dot = 0.0;
                                 for (int j = 0; j < k; ++j) dot += static_cast<double>(dout[s * k + j]) * out[s * k + j];
                                 for (int j = 0; j < k; ++j) {
                                   d[s * k + j] += static_cast<float>(out[s * k + j] * (dout[s * k + j] - dot));
                                 }
                               }
                             });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeMismatch("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<float> out(x.values().begin(), x.values().end());
  return detail::make_result(std::move(shape), std::move(out), {x},
                             [](detail::Node& self, std::span<const float> dout) {
                               auto d = self.input_grad(0);
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] += dout[i];
                             });
}

Tensor weighted_sum(const Tensor& x, std::span<const float> weights) {
  if (weights.size() != x.numel()) throw ShapeMismatch("weighted_sum: weight count differs from numel");
  const auto xv = x.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += static_cast<double>(weights[i]) * xv[i];
  std::vector<float> w(weights.begin(), weights.end());
  return detail::make_result({1}, {static_cast<float>(acc)}, {x},
                             [w = std::move(w)](detail::Node& self, std::span<const float> dout) {
                               auto d = self.input_grad(0);
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] += dout[0] * w[i];
                             });
}

}  // namespace v2nc
