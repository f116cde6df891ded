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

// 3-D convolution via chunked im2col + GEMM. The "big" grid is the conv
// input (transpose-conv output); the "small" grid is the conv output.

#include <Eigen/Core>
#include <algorithm>
#include <cstring>

#include "node.hpp"
#include "v2nc/errors.hpp"
#include "v2nc/ops.hpp"

namespace v2nc {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstMatMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

// Budget for one im2col buffer, in floats.
constexpr long kColBudget = 1L << 18;

struct ConvGeom {
  Int3 big{};
  Int3 kernel{};
  Int3 stride{};
  Int3 pad{};
  Int3 small{};
  long big_vox = 0;
  long small_vox = 0;
  int kvol = 0;

  bool pointwise() const {
    return kernel == Int3{1, 1, 1} && stride == Int3{1, 1, 1} && pad == Int3{0, 0, 0};
  }
  long chunk(int channels) const {
    const long rows = static_cast<long>(channels) * kvol;
    return std::min(std::max(kColBudget / rows, 64L), small_vox);
  }
};

ConvGeom make_geom(Int3 big, Int3 kernel, Int3 stride, Int3 pad, Int3 small) {
  ConvGeom g{big, kernel, stride, pad, small, 1, 1, kernel[0] * kernel[1] * kernel[2]};
  for (int a = 0; a < 3; ++a) {
    g.big_vox *= big[a];
    g.small_vox *= small[a];
  }
  return g;
}

// Output slices oz whose input index oz*s - p + k falls inside [0, n).
struct ZRange {
  int lo = 0;
  int hi = 0;
};

ZRange valid_z(const ConvGeom& g, int k) {
  const int s = g.stride[2], p = g.pad[2], n = g.big[2];
  // smallest oz with oz*s >= p - k, largest with oz*s <= n - 1 + p - k
  const int lo_num = p - k;
  const int lo = lo_num <= 0 ? 0 : (lo_num + s - 1) / s;
  const int hi_num = n - 1 + p - k;
  const int hi = hi_num < 0 ? 0 : hi_num / s + 1;
  return {std::min(lo, g.small[2]), std::clamp(hi, 0, g.small[2])};
}

// Visits each (row, run) of the chunk [v0, v1): `fn(out_offset, line, oz, run, zr)`
// with line == nullptr when the (x, y) tap is outside the big grid.
template <class Line, class Fn>
void for_each_run(Line* plane, const ConvGeom& g, int i, int j, long v0, long v1, Fn&& fn) {
  const int SY = g.small[1], SZ = g.small[2];
  const int BX = g.big[0], BY = g.big[1], BZ = g.big[2];
  int ox = static_cast<int>(v0 / (static_cast<long>(SY) * SZ));
  int oy = static_cast<int>((v0 / SZ) % SY);
  int oz = static_cast<int>(v0 % SZ);
  long v = v0;
  while (v < v1) {
    const int run = static_cast<int>(std::min<long>(SZ - oz, v1 - v));
    const int ix = ox * g.stride[0] - g.pad[0] + i;
    const int iy = oy * g.stride[1] - g.pad[1] + j;
    Line* line = (ix < 0 || ix >= BX || iy < 0 || iy >= BY) ? nullptr : plane + (static_cast<long>(ix) * BY + iy) * BZ;
    fn(v - v0, line, oz, run);
    v += run;
    oz = 0;
    if (++oy == SY) {
      oy = 0;
      ++ox;
    }
  }
}

// cols[(c, i, j, k), t] = big[c, o*s - p + (i,j,k)] for small voxels t in [v0, v1).
void im2col(const float* src, int channels, const ConvGeom& g, long v0, long v1, float* cols) {
  const long width = v1 - v0;
  const int sz = g.stride[2];
  for (int c = 0; c < channels; ++c) {
    const float* plane = src + static_cast<long>(c) * g.big_vox;
    for (int i = 0; i < g.kernel[0]; ++i)
      for (int j = 0; j < g.kernel[1]; ++j)
        for (int k = 0; k < g.kernel[2]; ++k) {
          const long row = ((static_cast<long>(c) * g.kernel[0] + i) * g.kernel[1] + j) * g.kernel[2] + k;
          float* dst = cols + row * width;
          const ZRange zr = valid_z(g, k);
          const int shift = k - g.pad[2];
          for_each_run(plane, g, i, j, v0, v1, [&](long off, const float* line, int oz, int run) {
            float* out = dst + off;
            if (line == nullptr) {
              std::memset(out, 0, sizeof(float) * run);
              return;
            }
            const int a = std::clamp(zr.lo, oz, oz + run), b = std::clamp(zr.hi, a, oz + run);
            for (int z = oz; z < a; ++z) out[z - oz] = 0.0f;
            if (sz == 1) {
              std::memcpy(out + (a - oz), line + a + shift, sizeof(float) * (b - a));
            } else {
              for (int z = a; z < b; ++z) out[z - oz] = line[z * sz + shift];
            }
            for (int z = b; z < oz + run; ++z) out[z - oz] = 0.0f;
          });
        }
  }
}

// Adjoint of im2col: scatter-add columns back into the big grid.
void col2im_add(const float* cols, int channels, const ConvGeom& g, long v0, long v1, float* dst) {
  const long width = v1 - v0;
  const int sz = g.stride[2];
  for (int c = 0; c < channels; ++c) {
    float* plane = dst + static_cast<long>(c) * g.big_vox;
    for (int i = 0; i < g.kernel[0]; ++i)
      for (int j = 0; j < g.kernel[1]; ++j)
        for (int k = 0; k < g.kernel[2]; ++k) {
          const long row = ((static_cast<long>(c) * g.kernel[0] + i) * g.kernel[1] + j) * g.kernel[2] + k;
          const float* src = cols + row * width;
          const ZRange zr = valid_z(g, k);
          const int shift = k - g.pad[2];
          for_each_run(plane, g, i, j, v0, v1, [&](long off, float* line, int oz, int run) {
            if (line == nullptr) return;
            const float* in = src + off;
            const int a = std::clamp(zr.lo, oz, oz + run), b = std::clamp(zr.hi, a, oz + run);
            if (sz == 1) {
              float* o = line + shift;
              for (int z = a; z < b; ++z) o[z] += in[z - oz];
            } else {
              for (int z = a; z < b; ++z) line[z * sz + shift] += in[z - oz];
            }
          });
        }
  }
}

// small[Cout, :] = W[Cout, Cin*kvol] * im2col(big)
void conv_forward_sample(const float* big, int cin, const float* w, int cout, const ConvGeom& g,
                         float* small) {
  const long K = static_cast<long>(cin) * g.kvol;
  ConstMatMap W(w, cout, K, Eigen::OuterStride<>(K));
  if (g.pointwise()) {
    ConstMatMap X(big, cin, g.small_vox, Eigen::OuterStride<>(g.big_vox));
    MatMap Y(small, cout, g.small_vox, Eigen::OuterStride<>(g.small_vox));
    Y.noalias() = W * X;
    return;
  }
  const long chunk = g.chunk(cin);
  RowMat cols(K, chunk);
  for (long v0 = 0; v0 < g.small_vox; v0 += chunk) {
    const long v1 = std::min(v0 + chunk, g.small_vox);
    const long width = v1 - v0;
    im2col(big, cin, g, v0, v1, cols.data());
    ConstMatMap C(cols.data(), K, width, Eigen::OuterStride<>(width));
    MatMap Y(small + v0, cout, width, Eigen::OuterStride<>(g.small_vox));
    Y.noalias() = W * C;
  }
}

// Given dSmall [Cout, small_vox], accumulate dW += dSmall * im2col(big)^T and
// dBig += col2im(W^T * dSmall). Either output pointer may be null.
void conv_backward_sample(const float* big, int cin, const float* w, int cout, const ConvGeom& g,
                          const float* dsmall, float* dw, float* dbig) {
  const long K = static_cast<long>(cin) * g.kvol;
  ConstMatMap W(w, cout, K, Eigen::OuterStride<>(K));
  if (g.pointwise()) {
    ConstMatMap D(dsmall, cout, g.small_vox, Eigen::OuterStride<>(g.small_vox));
    if (dw) {
      ConstMatMap X(big, cin, g.small_vox, Eigen::OuterStride<>(g.big_vox));
      MatMap DW(dw, cout, K, Eigen::OuterStride<>(K));
      DW.noalias() += D * X.transpose();
    }
    if (dbig) {
      MatMap DX(dbig, cin, g.small_vox, Eigen::OuterStride<>(g.big_vox));
      DX.noalias() += W.transpose() * D;
    }
    return;
  }
  const long chunk = g.chunk(cin);
  RowMat cols(K, chunk);
  for (long v0 = 0; v0 < g.small_vox; v0 += chunk) {
    const long v1 = std::min(v0 + chunk, g.small_vox);
    const long width = v1 - v0;
    ConstMatMap D(dsmall + v0, cout, width, Eigen::OuterStride<>(g.small_vox));
    MatMap C(cols.data(), K, width, Eigen::OuterStride<>(width));
    if (dw) {
      im2col(big, cin, g, v0, v1, cols.data());
      MatMap DW(dw, cout, K, Eigen::OuterStride<>(K));
      DW.noalias() += D * C.transpose();
    }
    if (dbig) {
      C.noalias() = W.transpose() * D;
      col2im_add(cols.data(), cin, g, v0, v1, dbig);
    }
  }
}

// big[Cbig, :] += col2im(W^T * small), W: [Csmall, Cbig*kvol]
void convT_forward_sample(const float* small, int csmall, const float* w, int cbig,
                          const ConvGeom& g, float* big) {
  const long K = static_cast<long>(cbig) * g.kvol;
  ConstMatMap W(w, csmall, K, Eigen::OuterStride<>(K));
  if (g.pointwise()) {
    ConstMatMap X(small, csmall, g.small_vox, Eigen::OuterStride<>(g.small_vox));
    MatMap Y(big, cbig, g.small_vox, Eigen::OuterStride<>(g.big_vox));
    Y.noalias() += W.transpose() * X;
    return;
  }
  const long chunk = g.chunk(cbig);
  RowMat cols(K, chunk);
  for (long v0 = 0; v0 < g.small_vox; v0 += chunk) {
    const long v1 = std::min(v0 + chunk, g.small_vox);
    const long width = v1 - v0;
    ConstMatMap X(small + v0, csmall, width, Eigen::OuterStride<>(g.small_vox));
    MatMap C(cols.data(), K, width, Eigen::OuterStride<>(width));
    C.noalias() = W.transpose() * X;
    col2im_add(cols.data(), cbig, g, v0, v1, big);
  }
}

// dW += small * im2col(dBig)^T, dSmall += W * im2col(dBig).
void convT_backward_sample(const float* small, int csmall, const float* w, int cbig,
                           const ConvGeom& g, const float* dbig, float* dw, float* dsmall) {
  const long K = static_cast<long>(cbig) * g.kvol;
  ConstMatMap W(w, csmall, K, Eigen::OuterStride<>(K));
  if (g.pointwise()) {
    ConstMatMap D(dbig, cbig, g.small_vox, Eigen::OuterStride<>(g.big_vox));
    if (dw) {
      ConstMatMap X(small, csmall, g.small_vox, Eigen::OuterStride<>(g.small_vox));
      MatMap DW(dw, csmall, K, Eigen::OuterStride<>(K));
      DW.noalias() += X * D.transpose();
    }
    if (dsmall) {
      MatMap DX(dsmall, csmall, g.small_vox, Eigen::OuterStride<>(g.small_vox));
      DX.noalias() += W * D;
    }
    return;
  }
  const long chunk = g.chunk(cbig);
  RowMat cols(K, chunk);
  for (long v0 = 0; v0 < g.small_vox; v0 += chunk) {
    const long v1 = std::min(v0 + chunk, g.small_vox);
    const long width = v1 - v0;
    im2col(dbig, cbig, g, v0, v1, cols.data());
    ConstMatMap C(cols.data(), K, width, Eigen::OuterStride<>(width));
    if (dw) {
      ConstMatMap X(small + v0, csmall, width, Eigen::OuterStride<>(g.small_vox));
      MatMap DW(dw, csmall, K, Eigen::OuterStride<>(K));
      DW.noalias() += X * C.transpose();
    }
    if (dsmall) {
      MatMap DX(dsmall + v0, csmall, width, Eigen::OuterStride<>(g.small_vox));
      DX.noalias() += W * C;
    }
  }
}

void check_5d(const Tensor& t, const char* what) {
  if (!t.defined() || t.ndim() != 5) {
    throw ShapeMismatch(std::string(what) + " must be 5-D, got " +
                        (t.defined() ? shape_str(t.shape()) : std::string("undefined")));
  }
}

void check_bias(const Tensor& b, int channels, const char* op) {
  if (b.defined() && (b.ndim() != 1 || b.dim(0) != channels)) {
    throw ShapeMismatch(std::string(op) + ": bias shape " + shape_str(b.shape()) + " != (" +
                        std::to_string(channels) + ")");
  }
}

void add_bias(std::vector<float>& out, const Tensor& b, int n, int c, long vox) {
  if (!b.defined()) return;
  const auto bv = b.values();
  for (int s = 0; s < n; ++s)
    for (int ch = 0; ch < c; ++ch) {
      float* p = out.data() + (static_cast<long>(s) * c + ch) * vox;
      const float v = bv[ch];
      for (long i = 0; i < vox; ++i) p[i] += v;
    }
}

void bias_grad(std::span<float> db, std::span<const float> dout, int n, int c, long vox) {
  if (db.empty()) return;
  for (int ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
      const float* p = dout.data() + (static_cast<long>(s) * c + ch) * vox;
      for (long i = 0; i < vox; ++i) acc += p[i];
    }
    db[ch] += static_cast<float>(acc);
  }
}

Int3 spatial(const Tensor& t) { return {t.dim(2), t.dim(3), t.dim(4)}; }
Int3 kernel_of(const Tensor& w) { return {w.dim(2), w.dim(3), w.dim(4)}; }

}  // namespace

int conv_out_extent(int n, int k, int stride, int pad) {
  const int span = n + 2 * pad - k;
  if (span < 0 || stride < 1) return 0;
  return span / stride + 1;
}

Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, Int3 stride, Int3 pad) {
  check_5d(x, "conv3d input");
  check_5d(w, "conv3d weight");
  const int n = x.dim(0), cin = x.dim(1), cout = w.dim(0);
  if (w.dim(1) != cin) {
    throw ShapeMismatch("conv3d: input has " + std::to_string(cin) + " channels, weight expects " +
                        std::to_string(w.dim(1)));
  }
  check_bias(b, cout, "conv3d");
  const Int3 in = spatial(x), k = kernel_of(w);
  Int3 out{};
  for (int a = 0; a < 3; ++a) {
    if (stride[a] < 1 || pad[a] < 0) throw ShapeMismatch("conv3d: invalid stride/pad");
    out[a] = conv_out_extent(in[a], k[a], stride[a], pad[a]);
    if (out[a] < 1) {
      throw ShapeMismatch("conv3d: kernel " + shape_str(w.shape()) + " does not fit input " +
                          shape_str(x.shape()));
    }
  }
  const ConvGeom g = make_geom(in, k, stride, pad, out);

  std::vector<float> value(static_cast<std::size_t>(n) * cout * g.small_vox);
  const float* xv = x.values().data();
  const float* wv = w.values().data();
  for (int s = 0; s < n; ++s) {
    conv_forward_sample(xv + static_cast<long>(s) * cin * g.big_vox, cin, wv, cout, g,
                        value.data() + static_cast<long>(s) * cout * g.small_vox);
  }
  add_bias(value, b, n, cout, g.small_vox);

  return detail::make_result(
      {n, cout, out[0], out[1], out[2]}, std::move(value), {x, w, b},
      [g, n, cin, cout](detail::Node& self, std::span<const float> dout) {
        auto dx = self.input_grad(0);
        auto dw = self.input_grad(1);
        auto db = self.input_grad(2);
        const float* xv = self.input_value(0).data();
        const float* wv = self.input_value(1).data();
        for (int s = 0; s < n; ++s) {
          conv_backward_sample(xv + static_cast<long>(s) * cin * g.big_vox, cin, wv, cout, g,
                               dout.data() + static_cast<long>(s) * cout * g.small_vox,
                               dw.empty() ? nullptr : dw.data(),
                               dx.empty() ? nullptr : dx.data() + static_cast<long>(s) * cin * g.big_vox);
        }
        bias_grad(db, dout, n, cout, g.small_vox);
      });
}

Tensor conv3d_transpose(const Tensor& x, const Tensor& w, const Tensor& b, Int3 stride, Int3 pad) {
  check_5d(x, "conv3d_transpose input");
  check_5d(w, "conv3d_transpose weight");
  const int n = x.dim(0), cin = x.dim(1), cout = w.dim(1);
  if (w.dim(0) != cin) {
    throw ShapeMismatch("conv3d_transpose: input has " + std::to_string(cin) +
                        " channels, weight expects " + std::to_string(w.dim(0)));
  }
  check_bias(b, cout, "conv3d_transpose");
  const Int3 in = spatial(x), k = kernel_of(w);
  Int3 out{};
  for (int a = 0; a < 3; ++a) {
    if (stride[a] < 1 || pad[a] < 0) throw ShapeMismatch("conv3d_transpose: invalid stride/pad");
    out[a] = (in[a] - 1) * stride[a] - 2 * pad[a] + k[a];
    if (out[a] < 1) throw ShapeMismatch("conv3d_transpose: empty output extent");
  }
  const ConvGeom g = make_geom(out, k, stride, pad, in);

  std::vector<float> value(static_cast<std::size_t>(n) * cout * g.big_vox, 0.0f);
  const float* xv = x.values().data();
  const float* wv = w.values().data();
  for (int s = 0; s < n; ++s) {
    convT_forward_sample(xv + static_cast<long>(s) * cin * g.small_vox, cin, wv, cout, g,
                         value.data() + static_cast<long>(s) * cout * g.big_vox);
  }
  add_bias(value, b, n, cout, g.big_vox);

  return detail::make_result(
      {n, cout, out[0], out[1], out[2]}, std::move(value), {x, w, b},
      [g, n, cin, cout](detail::Node& self, std::span<const float> dout) {
        auto dx = self.input_grad(0);
        auto dw = self.input_grad(1);
        auto db = self.input_grad(2);
        const float* xv = self.input_value(0).data();
        const float* wv = self.input_value(1).data();
        for (int s = 0; s < n; ++s) {
          convT_backward_sample(xv + static_cast<long>(s) * cin * g.small_vox, cin, wv, cout, g,
                                dout.data() + static_cast<long>(s) * cout * g.big_vox,
                                dw.empty() ? nullptr : dw.data(),
                                dx.empty() ? nullptr : dx.data() + static_cast<long>(s) * cin * g.small_vox);
        }
        bias_grad(db, dout, n, cout, g.big_vox);
      });
}

Tensor downsample_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_5d(w, "downsample_conv weight");
  return conv3d(x, w, b, kernel_of(w), {0, 0, 0});
}

}  // namespace v2nc
