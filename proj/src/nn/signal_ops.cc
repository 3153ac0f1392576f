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

#include "dfw/common/error.h"
#include "dfw/nn/ops.h"

namespace dfw::nn {
namespace {

int64_t rows_of(const Tensor& x) {
  int64_t r = 1;
  for (int64_t k = 0; k + 1 < x.dim(); ++k) r *= x.size(k);
  return r;
}

int64_t reflect_index(int64_t i, int64_t n) {
  // numpy "reflect": ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Tensor reflect_pad(const Tensor& x, int64_t left, int64_t right) {
  if (x.dim() < 1 || left < 0 || right < 0)
    fail(ErrorKind::kShapeMismatch, "reflect_pad: bad arguments");
  const int64_t n = x.size(x.dim() - 1), rows = rows_of(x), m = n + left + right;
  if (n == 0) fail(ErrorKind::kShapeMismatch, "reflect_pad of empty axis");
  std::vector<int64_t> src(static_cast<size_t>(m));
  for (int64_t i = 0; i < m; ++i) src[i] = reflect_index(i - left, n);
  Shape shape = x.shape();
  shape.back() = m;
  std::vector<real> y(static_cast<size_t>(rows * m));
  const auto xv = x.data();
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t i = 0; i < m; ++i) y[r * m + i] = xv[r * n + src[i]];
  return make_result(std::move(shape), std::move(y), {x}, [rows, n, m, src](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t i = 0; i < m; ++i) g[r * n + src[i]] += self.grad[r * m + i];
  });
}

Tensor frame(const Tensor& x, int64_t frame_length, int64_t hop, int64_t n_frames,
             int64_t offset) {
  if (x.dim() < 1 || frame_length <= 0 || hop <= 0 || n_frames < 0 || offset < 0)
    fail(ErrorKind::kShapeMismatch, "frame: bad arguments");
  const int64_t n = x.size(x.dim() - 1), rows = rows_of(x);
  if (n_frames > 0 && offset + (n_frames - 1) * hop + frame_length > n)
    fail(ErrorKind::kShapeMismatch, "frame: signal too short for requested frames");
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  shape.push_back(n_frames);
  shape.push_back(frame_length);
  const int64_t per_row = n_frames * frame_length;
  std::vector<real> y(static_cast<size_t>(rows * per_row));
  const auto xv = x.data();
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t f = 0; f < n_frames; ++f)
      std::copy_n(xv.begin() + r * n + offset + f * hop, frame_length,
                  y.begin() + r * per_row + f * frame_length);
  return make_result(std::move(shape), std::move(y), {x},
                     [rows, n, n_frames, frame_length, hop, offset, per_row](Node& self) {
                       auto& g = self.inputs[0]->ensure_grad();
                       for (int64_t r = 0; r < rows; ++r)
                         for (int64_t f = 0; f < n_frames; ++f) {
                           real* dst = g.data() + r * n + offset + f * hop;
                           const real* s = self.grad.data() + r * per_row + f * frame_length;
                           for (int64_t k = 0; k < frame_length; ++k) dst[k] += s[k];
                         }
                     });
}

Tensor deltas(const Tensor& x) {
  if (x.dim() < 1) fail(ErrorKind::kShapeMismatch, "deltas of a scalar");
  const int64_t t = x.size(x.dim() - 1), rows = rows_of(x);
  constexpr int64_t kWindow = 2;
  constexpr real kDenominator = 10.0;  // 2 * sum_{n=1..2} n^2
  auto clampi = [t](int64_t i) { return std::clamp<int64_t>(i, 0, t - 1); };
  std::vector<real> y(static_cast<size_t>(rows * t), 0.0);
  const auto xv = x.data();
  for (int64_t r = 0; r < rows; ++r) {
    const real* xr = xv.data() + r * t;
    for (int64_t i = 0; i < t; ++i) {
      real acc = 0.0;
      for (int64_t k = 1; k <= kWindow; ++k)
        acc += static_cast<real>(k) * (xr[clampi(i + k)] - xr[clampi(i - k)]);
      y[r * t + i] = acc / kDenominator;
    }
  }
  return make_result(x.shape(), std::move(y), {x}, [rows, t, clampi](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t i = 0; i < t; ++i) {
        const real gi = self.grad[r * t + i] / kDenominator;
        for (int64_t k = 1; k <= kWindow; ++k) {
          g[r * t + clampi(i + k)] += static_cast<real>(k) * gi;
          g[r * t + clampi(i - k)] -= static_cast<real>(k) * gi;
        }
      }
  });
}

}  // namespace dfw::nn
