// Copyright 2026  The dfwhisper Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <limits>

#include "dfw/common/error.h"
#include "dfw/nn/ops.h"
#include "gemm.h"

namespace dfw::nn {
namespace {

struct ConvPlan {
  int64_t n, c, h, w;      // input
  int64_t o, kh, kw;       // weight
  int64_t oh, ow;          // output
  Conv2dGeometry g;
  int64_t ck() const { return c * kh * kw; }
  bool pointwise() const {
    return kh == 1 && kw == 1 && g.stride_h == 1 && g.stride_w == 1 && g.pad_h == 0 &&
           g.pad_w == 0;
  }
};

// Output rows per im2col chunk; bounds the column buffer for large inputs.
int64_t rows_per_chunk(const ConvPlan& p) {
  constexpr int64_t kBudget = 1 << 21;  // elements
  return std::max<int64_t>(1, kBudget / std::max<int64_t>(1, p.ck() * p.ow));
}

void im2col(const ConvPlan& p, const real* x, int64_t oh0, int64_t oh1, real* col) {
  const int64_t cols = (oh1 - oh0) * p.ow;
  for (int64_t ci = 0; ci < p.c; ++ci)
    for (int64_t ki = 0; ki < p.kh; ++ki)
      for (int64_t kj = 0; kj < p.kw; ++kj) {
        real* dst = col + ((ci * p.kh + ki) * p.kw + kj) * cols;
        const int64_t dx = kj * p.g.dilation_w - p.g.pad_w;
        // valid ow range: 0 <= ow*sw + dx < w
        int64_t ow_lo = dx >= 0 ? 0 : (-dx + p.g.stride_w - 1) / p.g.stride_w;
        int64_t ow_hi = (p.w - 1 - dx) >= 0 ? (p.w - 1 - dx) / p.g.stride_w + 1 : 0;
        ow_lo = std::min(ow_lo, p.ow);
        ow_hi = std::clamp(ow_hi, ow_lo, p.ow);
        for (int64_t r = oh0; r < oh1; ++r, dst += p.ow) {
          const int64_t ih = r * p.g.stride_h - p.g.pad_h + ki * p.g.dilation_h;
          if (ih < 0 || ih >= p.h) {
            std::fill_n(dst, p.ow, 0.0);
            continue;
          }
          const real* src = x + (ci * p.h + ih) * p.w;
          std::fill_n(dst, ow_lo, 0.0);
          if (p.g.stride_w == 1) {
            std::copy_n(src + ow_lo + dx, ow_hi - ow_lo, dst + ow_lo);
          } else {
            for (int64_t q = ow_lo; q < ow_hi; ++q) dst[q] = src[q * p.g.stride_w + dx];
          }
          std::fill(dst + ow_hi, dst + p.ow, 0.0);
        }
      }
}

void col2im(const ConvPlan& p, const real* col, int64_t oh0, int64_t oh1, real* dx_out) {
  const int64_t cols = (oh1 - oh0) * p.ow;
  for (int64_t ci = 0; ci < p.c; ++ci)
    for (int64_t ki = 0; ki < p.kh; ++ki)
      for (int64_t kj = 0; kj < p.kw; ++kj) {
        const real* src = col + ((ci * p.kh + ki) * p.kw + kj) * cols;
        const int64_t dx = kj * p.g.dilation_w - p.g.pad_w;
        int64_t ow_lo = dx >= 0 ? 0 : (-dx + p.g.stride_w - 1) / p.g.stride_w;
        int64_t ow_hi = (p.w - 1 - dx) >= 0 ? (p.w - 1 - dx) / p.g.stride_w + 1 : 0;
        ow_lo = std::min(ow_lo, p.ow);
        ow_hi = std::clamp(ow_hi, ow_lo, p.ow);
        for (int64_t r = oh0; r < oh1; ++r, src += p.ow) {
          const int64_t ih = r * p.g.stride_h - p.g.pad_h + ki * p.g.dilation_h;
          if (ih < 0 || ih >= p.h) continue;
          real* dst = dx_out + (ci * p.h + ih) * p.w;
          for (int64_t q = ow_lo; q < ow_hi; ++q) dst[q * p.g.stride_w + dx] += src[q];
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dGeometry& geometry) {
  if (x.dim() != 4 || weight.dim() != 4 || x.size(1) != weight.size(1)) {
    fail(ErrorKind::kShapeMismatch, "conv2d: input " + shape_str(x.shape()) + " weight " +
                                        shape_str(weight.shape()));
  }
  ConvPlan p{x.size(0), x.size(1), x.size(2), x.size(3), weight.size(0), weight.size(2),
             weight.size(3), 0, 0, geometry};
  p.oh = (p.h + 2 * p.g.pad_h - p.g.dilation_h * (p.kh - 1) - 1) / p.g.stride_h + 1;
  p.ow = (p.w + 2 * p.g.pad_w - p.g.dilation_w * (p.kw - 1) - 1) / p.g.stride_w + 1;
  if (p.oh <= 0 || p.ow <= 0) fail(ErrorKind::kShapeMismatch, "conv2d: input too small");
  const bool has_bias = bias.defined();
  if (has_bias && bias.numel() != p.o) fail(ErrorKind::kShapeMismatch, "conv2d: bias size");

  const int64_t out_plane = p.oh * p.ow;
  std::vector<real> y(static_cast<size_t>(p.n * p.o * out_plane));
  const real* xv = x.data().data();
  const real* wv = weight.data().data();
  const int64_t chunk_rows = rows_per_chunk(p);
  std::vector<real> col;
  std::vector<real> tmp;
  for (int64_t b = 0; b < p.n; ++b) {
    const real* xb = xv + b * p.c * p.h * p.w;
    real* yb = y.data() + b * p.o * out_plane;
    if (p.pointwise()) {
      detail::gemm(false, false, p.o, out_plane, p.c, wv, xb, yb, false);
    } else {
      for (int64_t r0 = 0; r0 < p.oh; r0 += chunk_rows) {
        const int64_t r1 = std::min(p.oh, r0 + chunk_rows);
        const int64_t cols = (r1 - r0) * p.ow;
        col.resize(static_cast<size_t>(p.ck() * cols));
        im2col(p, xb, r0, r1, col.data());
        if (r0 == 0 && r1 == p.oh) {
          detail::gemm(false, false, p.o, cols, p.ck(), wv, col.data(), yb, false);
        } else {
          tmp.resize(static_cast<size_t>(p.o * cols));
          detail::gemm(false, false, p.o, cols, p.ck(), wv, col.data(), tmp.data(), false);
          for (int64_t oc = 0; oc < p.o; ++oc)
            std::copy_n(tmp.begin() + oc * cols, cols, yb + oc * out_plane + r0 * p.ow);
        }
      }
    }
    if (has_bias) {
      const auto& bv = bias.data();
      for (int64_t oc = 0; oc < p.o; ++oc) {
        real* plane = yb + oc * out_plane;
        for (int64_t i = 0; i < out_plane; ++i) plane[i] += bv[oc];
      }
    }
  }

  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result({p.n, p.o, p.oh, p.ow}, std::move(y), inputs, [p, chunk_rows](Node& self) {
    Node* nx = self.inputs[0].get();
    Node* nw = self.inputs[1].get();
    Node* nb = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
    const int64_t out_plane = p.oh * p.ow;
    std::vector<real> col, dcol, dy_chunk;
    for (int64_t b = 0; b < p.n; ++b) {
      const real* xb = nx->value.data() + b * p.c * p.h * p.w;
      const real* dyb = self.grad.data() + b * p.o * out_plane;
      if (nb && nb->requires_grad) {
        auto& gb = nb->ensure_grad();
        for (int64_t oc = 0; oc < p.o; ++oc) {
          real s = 0;
          for (int64_t i = 0; i < out_plane; ++i) s += dyb[oc * out_plane + i];
          gb[oc] += s;
        }
      }
      if (p.pointwise()) {
        if (nw->requires_grad)
          detail::gemm(false, true, p.o, p.c, out_plane, dyb, xb, nw->ensure_grad().data(), true);
        if (nx->requires_grad)
          detail::gemm(true, false, p.c, out_plane, p.o, nw->value.data(), dyb,
                       nx->ensure_grad().data() + b * p.c * p.h * p.w, true);
        continue;
      }
      for (int64_t r0 = 0; r0 < p.oh; r0 += chunk_rows) {
        const int64_t r1 = std::min(p.oh, r0 + chunk_rows);
        const int64_t cols = (r1 - r0) * p.ow;
        const real* dy = dyb;
        if (!(r0 == 0 && r1 == p.oh)) {
          dy_chunk.resize(static_cast<size_t>(p.o * cols));
          for (int64_t oc = 0; oc < p.o; ++oc)
            std::copy_n(dyb + oc * out_plane + r0 * p.ow, cols, dy_chunk.begin() + oc * cols);
          dy = dy_chunk.data();
        }
        if (nw->requires_grad) {
          col.resize(static_cast<size_t>(p.ck() * cols));
          im2col(p, xb, r0, r1, col.data());
          detail::gemm(false, true, p.o, p.ck(), cols, dy, col.data(), nw->ensure_grad().data(),
                       true);
        }
        if (nx->requires_grad) {
          dcol.resize(static_cast<size_t>(p.ck() * cols));
          detail::gemm(true, false, p.ck(), cols, p.o, nw->value.data(), dy, dcol.data(), false);
          col2im(p, dcol.data(), r0, r1, nx->ensure_grad().data() + b * p.c * p.h * p.w);
        }
      }
    }
  });
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int64_t stride,
              int64_t padding) {
  if (x.dim() != 3 || weight.dim() != 3) fail(ErrorKind::kShapeMismatch, "conv1d rank");
  Tensor x4 = reshape(x, {x.size(0), x.size(1), 1, x.size(2)});
  Tensor w4 = reshape(weight, {weight.size(0), weight.size(1), 1, weight.size(2)});
  Conv2dGeometry g;
  g.stride_w = stride;
  g.pad_w = padding;
  Tensor y = conv2d(x4, w4, bias, g);
  return reshape(y, {y.size(0), y.size(1), y.size(3)});
}

Tensor max_pool2d(const Tensor& x, int64_t kernel_h, int64_t kernel_w) {
  if (x.dim() != 4) fail(ErrorKind::kShapeMismatch, "max_pool2d needs (N, C, H, W)");
  const int64_t nc = x.size(0) * x.size(1), h = x.size(2), w = x.size(3);
  const int64_t oh = h / kernel_h, ow = w / kernel_w;
  if (oh == 0 || ow == 0) {
    fail(ErrorKind::kShapeMismatch, "max_pool2d: input " + shape_str(x.shape()) +
                                        " smaller than kernel");
  }
  std::vector<real> y(static_cast<size_t>(nc * oh * ow));
  std::vector<int64_t> arg(y.size());
  const auto& xv = x.data();
  for (int64_t p = 0; p < nc; ++p)
    for (int64_t i = 0; i < oh; ++i)
      for (int64_t j = 0; j < ow; ++j) {
        real best = -std::numeric_limits<real>::infinity();
        int64_t best_idx = -1;
        for (int64_t a = 0; a < kernel_h; ++a)
          for (int64_t b = 0; b < kernel_w; ++b) {
            const int64_t idx = (p * h + i * kernel_h + a) * w + j * kernel_w + b;
            // NaN propagates, first maximum wins ties.
            if (xv[idx] > best || std::isnan(xv[idx]) || best_idx < 0) {
              best = xv[idx];
              best_idx = idx;
              if (std::isnan(best)) break;
            }
          }
        const int64_t o = (p * oh + i) * ow + j;
        y[o] = best;
        arg[o] = best_idx;
      }
  Shape out_shape{x.size(0), x.size(1), oh, ow};
  return make_result(std::move(out_shape), std::move(y), {x}, [arg = std::move(arg)](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (size_t o = 0; o < arg.size(); ++o) g[arg[o]] += self.grad[o];
  });
}

namespace {
inline int64_t pool_start(int64_t i, int64_t in, int64_t out) { return (i * in) / out; }
inline int64_t pool_end(int64_t i, int64_t in, int64_t out) {
  return ((i + 1) * in + out - 1) / out;
}
}  // namespace

Tensor adaptive_avg_pool2d(const Tensor& x, int64_t out_h, int64_t out_w) {
  if (x.dim() != 4) fail(ErrorKind::kShapeMismatch, "adaptive_avg_pool2d needs (N, C, H, W)");
  const int64_t nc = x.size(0) * x.size(1), h = x.size(2), w = x.size(3);
  if (out_h < 0) out_h = h;
  if (out_w < 0) out_w = w;
  std::vector<real> y(static_cast<size_t>(nc * out_h * out_w));
  const auto& xv = x.data();
  for (int64_t p = 0; p < nc; ++p)
    for (int64_t i = 0; i < out_h; ++i)
      for (int64_t j = 0; j < out_w; ++j) {
        const int64_t h0 = pool_start(i, h, out_h), h1 = pool_end(i, h, out_h);
        const int64_t w0 = pool_start(j, w, out_w), w1 = pool_end(j, w, out_w);
        real s = 0;
        for (int64_t a = h0; a < h1; ++a)
          for (int64_t b = w0; b < w1; ++b) s += xv[(p * h + a) * w + b];
        y[(p * out_h + i) * out_w + j] = s / static_cast<real>((h1 - h0) * (w1 - w0));
      }
  Shape out_shape{x.size(0), x.size(1), out_h, out_w};
  return make_result(std::move(out_shape), std::move(y), {x}, [nc, h, w, out_h, out_w](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (int64_t p = 0; p < nc; ++p)
      for (int64_t i = 0; i < out_h; ++i)
        for (int64_t j = 0; j < out_w; ++j) {
          const int64_t h0 = pool_start(i, h, out_h), h1 = pool_end(i, h, out_h);
          const int64_t w0 = pool_start(j, w, out_w), w1 = pool_end(j, w, out_w);
          const real d = self.grad[(p * out_h + i) * out_w + j] /
                         static_cast<real>((h1 - h0) * (w1 - w0));
          for (int64_t a = h0; a < h1; ++a)
            for (int64_t b = w0; b < w1; ++b) g[(p * h + a) * w + b] += d;
        }
  });
}

Tensor adaptive_avg_pool1d(const Tensor& x, int64_t out) {
  if (x.dim() != 2) fail(ErrorKind::kShapeMismatch, "adaptive_avg_pool1d needs (B, L)");
  Tensor x4 = reshape(x, {x.size(0), 1, 1, x.size(1)});
  return reshape(adaptive_avg_pool2d(x4, 1, out), {x.size(0), out});
}

Tensor max_feature_map(const Tensor& x) {
  if (x.dim() < 2 || x.size(1) % 2 != 0) {
    fail(ErrorKind::kShapeMismatch, "max_feature_map needs an even channel count");
  }
  const int64_t n = x.size(0), c = x.size(1), half = c / 2;
  const int64_t inner = x.numel() / (n * c);
  Shape out_shape = x.shape();
  out_shape[1] = half;
  std::vector<real> y(static_cast<size_t>(n * half * inner));
  std::vector<int64_t> arg(y.size());
  const auto& xv = x.data();
  for (int64_t b = 0; b < n; ++b)
    for (int64_t ch = 0; ch < half; ++ch)
      for (int64_t i = 0; i < inner; ++i) {
        const int64_t lo = (b * c + ch) * inner + i;
        const int64_t hi = (b * c + ch + half) * inner + i;
        const int64_t o = (b * half + ch) * inner + i;
        // torch.max over the split axis returns the first index on ties.
        const bool take_hi = xv[hi] > xv[lo];
        y[o] = take_hi ? xv[hi] : xv[lo];
        arg[o] = take_hi ? hi : lo;
      }
  return make_result(std::move(out_shape), std::move(y), {x}, [arg = std::move(arg)](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (size_t o = 0; o < arg.size(); ++o) g[arg[o]] += self.grad[o];
  });
}

}  // namespace dfw::nn
