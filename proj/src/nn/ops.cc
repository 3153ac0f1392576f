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

#include "dfw/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dfw/common/error.h"
#include "gemm.h"

namespace dfw::nn {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::kShapeMismatch, std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                                        shape_str(b.shape()));
  }
}

int64_t normalize_axis(int64_t axis, int64_t dim) {
  if (axis < 0) axis += dim;
  if (axis < 0 || axis >= dim) fail(ErrorKind::kShapeMismatch, "axis out of range");
  return axis;
}

/// Elementwise unary op given f(x) and f'(x, y).
template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D df) {
  const auto& x = a.data();
  std::vector<real> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return make_result(a.shape(), std::move(y), {a}, [df](Node& self) {
    Node* in = self.inputs[0].get();
    auto& g = in->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(in->value[i], self.value[i]);
  });
}

}  // namespace

// ---- elementwise ---------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<real> y(a.data().begin(), a.data().end());
  const auto& bv = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto& g = in->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<real> y(a.data().begin(), a.data().end());
  const auto& bv = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    for (size_t k = 0; k < 2; ++k) {
      Node* in = self.inputs[k].get();
      if (!in->requires_grad) continue;
      auto& g = in->ensure_grad();
      const real sign = k == 0 ? 1.0 : -1.0;
      for (size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<real> y(av.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    Node* na = self.inputs[0].get();
    Node* nb = self.inputs[1].get();
    if (na->requires_grad) {
      auto& g = na->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb->value[i];
    }
    if (nb->requires_grad) {
      auto& g = nb->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * na->value[i];
    }
  });
}

Tensor scale(const Tensor& a, real factor) {
  return unary(
      a, [factor](real x) { return x * factor; }, [factor](real, real) { return factor; });
}

Tensor add_scalar(const Tensor& a, real value) {
  return unary(
      a, [value](real x) { return x + value; }, [](real, real) { return 1.0; });
}

Tensor square(const Tensor& a) {
  return unary(
      a, [](real x) { return x * x; }, [](real x, real) { return 2.0 * x; });
}

Tensor log_eps(const Tensor& a, real eps) {
  return unary(
      a, [eps](real x) { return std::log(x + eps); },
      [eps](real x, real) { return 1.0 / (x + eps); });
}

Tensor log10_floor(const Tensor& a, real floor) {
  return unary(
      a, [floor](real x) { return std::log10(std::max(x, floor)); },
      [floor](real x, real) { return x > floor ? 1.0 / (x * std::numbers::ln10) : 0.0; });
}

Tensor clamp_below_global_max(const Tensor& a, real range) {
  const auto& x = a.data();
  if (x.empty()) return a;
  const size_t argmax = static_cast<size_t>(std::max_element(x.begin(), x.end()) - x.begin());
  const real floor = x[argmax] - range;
  std::vector<real> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = std::max(x[i], floor);
  return make_result(a.shape(), std::move(y), {a}, [argmax, floor](Node& self) {
    Node* in = self.inputs[0].get();
    auto& g = in->ensure_grad();
    real to_max = 0.0;
    for (size_t i = 0; i < g.size(); ++i) {
      if (in->value[i] >= floor) {
        g[i] += self.grad[i];
      } else {
        to_max += self.grad[i];
      }
    }
    g[argmax] += to_max;
  });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](real x) { return x > 0 || std::isnan(x) ? x : 0.0; }, [](real x, real) { return x > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, real slope) {
  return unary(
      a, [slope](real x) { return x > 0 ? x : slope * x; },
      [slope](real x, real) { return x > 0 ? 1.0 : slope; });
}

Tensor selu(const Tensor& a) {
  constexpr real kScale = 1.0507009873554804934193349852946;
  constexpr real kAlpha = 1.6732632423543772848170429916717;
  return unary(
      a, [](real x) { return x > 0 ? kScale * x : kScale * kAlpha * std::expm1(x); },
      [](real x, real) { return x > 0 ? kScale : kScale * kAlpha * std::exp(x); });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](real x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      },
      [](real, real y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](real x) { return std::tanh(x); }, [](real, real y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& a) {
  return unary(
      a, [](real x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); },
      [](real x, real) {
        const real cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
        const real pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + x * pdf;
      });
}

Tensor add_bias(const Tensor& x, const Tensor& bias, int64_t axis) {
  axis = normalize_axis(axis, x.dim());
  const int64_t channels = x.size(axis);
  if (bias.numel() != channels) fail(ErrorKind::kShapeMismatch, "add_bias: bias size");
  int64_t inner = 1;
  for (int64_t d = axis + 1; d < x.dim(); ++d) inner *= x.size(d);
  const int64_t outer = x.numel() / (channels * inner);
  std::vector<real> y(x.data().begin(), x.data().end());
  const auto& b = bias.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t c = 0; c < channels; ++c) {
      real* row = y.data() + (o * channels + c) * inner;
      for (int64_t i = 0; i < inner; ++i) row[i] += b[c];
    }
  return make_result(x.shape(), std::move(y), {x, bias}, [outer, channels, inner](Node& self) {
    Node* nx = self.inputs[0].get();
    Node* nb = self.inputs[1].get();
    if (nx->requires_grad) {
      auto& g = nx->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (nb->requires_grad) {
      auto& g = nb->ensure_grad();
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t c = 0; c < channels; ++c) {
          const real* row = self.grad.data() + (o * channels + c) * inner;
          real s = 0;
          for (int64_t i = 0; i < inner; ++i) s += row[i];
          g[c] += s;
        }
    }
  });
}

Tensor expand_channels(const Tensor& y, const Shape& like) {
  if (y.dim() != 2 || like.size() < 2 || y.size(0) != like[0] || y.size(1) != like[1]) {
    fail(ErrorKind::kShapeMismatch, "expand_channels: " + shape_str(y.shape()) + " to " +
                                        shape_str(like));
  }
  const int64_t bc = like[0] * like[1];
  const int64_t inner = shape_numel(like) / bc;
  std::vector<real> out(static_cast<size_t>(bc * inner));
  const auto& v = y.data();
  for (int64_t i = 0; i < bc; ++i) std::fill_n(out.begin() + i * inner, inner, v[i]);
  return make_result(like, std::move(out), {y}, [bc, inner](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (int64_t i = 0; i < bc; ++i) {
      real s = 0;
      for (int64_t k = 0; k < inner; ++k) s += self.grad[i * inner + k];
      g[i] += s;
    }
  });
}

// ---- shape ---------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape) {
  int64_t known = 1, infer = -1;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      infer = static_cast<int64_t>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0 && known > 0) shape[infer] = x.numel() / known;
  if (shape_numel(shape) != x.numel()) {
    fail(ErrorKind::kShapeMismatch, "reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  std::vector<real> y(x.data().begin(), x.data().end());
  return make_result(std::move(shape), std::move(y), {x}, [](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& x, const std::vector<int64_t>& perm) {
  const int64_t d = x.dim();
  if (static_cast<int64_t>(perm.size()) != d) fail(ErrorKind::kShapeMismatch, "permute rank");
  Shape out_shape(d);
  std::vector<int64_t> in_strides(d), src_strides(d);
  int64_t s = 1;
  for (int64_t i = d - 1; i >= 0; --i) {
    in_strides[i] = s;
    s *= x.size(i);
  }
  for (int64_t i = 0; i < d; ++i) {
    out_shape[i] = x.size(perm[i]);
    src_strides[i] = in_strides[perm[i]];
  }
  const int64_t n = x.numel();
  // Gather index for every output element, reused by backward.
  auto index = std::make_shared<std::vector<int64_t>>(n);
  {
    std::vector<int64_t> counter(d, 0);
    int64_t src = 0;
    for (int64_t o = 0; o < n; ++o) {
      (*index)[o] = src;
      for (int64_t k = d - 1; k >= 0; --k) {
        if (++counter[k] < out_shape[k]) {
          src += src_strides[k];
          break;
        }
        src -= src_strides[k] * (out_shape[k] - 1);
        counter[k] = 0;
      }
    }
  }
  std::vector<real> y(n);
  const auto& xv = x.data();
  for (int64_t o = 0; o < n; ++o) y[o] = xv[(*index)[o]];
  return make_result(std::move(out_shape), std::move(y), {x}, [index](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (size_t o = 0; o < index->size(); ++o) g[(*index)[o]] += self.grad[o];
  });
}

Tensor concat(const std::vector<Tensor>& parts, int64_t axis) {
  if (parts.empty()) fail(ErrorKind::kShapeMismatch, "concat of nothing");
  const int64_t d = parts[0].dim();
  axis = normalize_axis(axis, d);
  Shape out_shape = parts[0].shape();
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.dim() != d) fail(ErrorKind::kShapeMismatch, "concat rank");
    for (int64_t k = 0; k < d; ++k) {
      if (k != axis && p.size(k) != parts[0].size(k)) {
        fail(ErrorKind::kShapeMismatch, "concat: " + shape_str(p.shape()) + " vs " +
                                            shape_str(parts[0].shape()));
      }
    }
    out_shape[axis] += p.size(axis);
  }
  int64_t outer = 1, inner = 1;
  for (int64_t k = 0; k < axis; ++k) outer *= out_shape[k];
  for (int64_t k = axis + 1; k < d; ++k) inner *= out_shape[k];
  const int64_t out_row = out_shape[axis] * inner;
  std::vector<real> y(static_cast<size_t>(shape_numel(out_shape)));
  std::vector<int64_t> offsets;
  int64_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const int64_t row = p.size(axis) * inner;
    const auto& pv = p.data();
    for (int64_t o = 0; o < outer; ++o)
      std::copy_n(pv.begin() + o * row, row, y.begin() + o * out_row + off);
    off += row;
  }
  return make_result(std::move(out_shape), std::move(y), parts,
                     [outer, out_row, offsets](Node& self) {
                       for (size_t k = 0; k < self.inputs.size(); ++k) {
                         Node* in = self.inputs[k].get();
                         if (!in->requires_grad) continue;
                         auto& g = in->ensure_grad();
                         const int64_t row = static_cast<int64_t>(g.size()) / outer;
                         for (int64_t o = 0; o < outer; ++o)
                           for (int64_t i = 0; i < row; ++i)
                             g[o * row + i] += self.grad[o * out_row + offsets[k] + i];
                       }
                     });
}

Tensor slice(const Tensor& x, int64_t axis, int64_t start, int64_t length) {
  axis = normalize_axis(axis, x.dim());
  if (start < 0 || length < 0 || start + length > x.size(axis)) {
    fail(ErrorKind::kShapeMismatch, "slice out of range");
  }
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  int64_t outer = 1, inner = 1;
  for (int64_t k = 0; k < axis; ++k) outer *= x.size(k);
  for (int64_t k = axis + 1; k < x.dim(); ++k) inner *= x.size(k);
  const int64_t in_row = x.size(axis) * inner, out_row = length * inner;
  std::vector<real> y(static_cast<size_t>(outer * out_row));
  const auto& xv = x.data();
  for (int64_t o = 0; o < outer; ++o)
    std::copy_n(xv.begin() + o * in_row + start * inner, out_row, y.begin() + o * out_row);
  return make_result(std::move(out_shape), std::move(y), {x},
                     [outer, in_row, out_row, start, inner](Node& self) {
                       auto& g = self.inputs[0]->ensure_grad();
                       for (int64_t o = 0; o < outer; ++o)
                         for (int64_t i = 0; i < out_row; ++i)
                           g[o * in_row + start * inner + i] += self.grad[o * out_row + i];
                     });
}

Tensor tile_axis(const Tensor& x, int64_t axis, int64_t length) {
  axis = normalize_axis(axis, x.dim());
  const int64_t n = x.size(axis);
  if (n == 0) fail(ErrorKind::kShapeMismatch, "tile_axis of empty axis");
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  int64_t outer = 1, inner = 1;
  for (int64_t k = 0; k < axis; ++k) outer *= x.size(k);
  for (int64_t k = axis + 1; k < x.dim(); ++k) inner *= x.size(k);
  std::vector<real> y(static_cast<size_t>(outer * length * inner));
  const auto& xv = x.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t t = 0; t < length; ++t)
      std::copy_n(xv.begin() + (o * n + t % n) * inner, inner,
                  y.begin() + (o * length + t) * inner);
  return make_result(std::move(out_shape), std::move(y), {x},
                     [outer, length, inner, n](Node& self) {
                       auto& g = self.inputs[0]->ensure_grad();
                       for (int64_t o = 0; o < outer; ++o)
                         for (int64_t t = 0; t < length; ++t)
                           for (int64_t i = 0; i < inner; ++i)
                             g[(o * n + t % n) * inner + i] +=
                                 self.grad[(o * length + t) * inner + i];
                     });
}

// ---- reductions ----------------------------------------------------------

Tensor sum(const Tensor& x) {
  real s = 0;
  for (real v : x.data()) s += v;
  return make_result(Shape{}, {s}, {x}, [](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  const real n = static_cast<real>(x.numel());
  return scale(sum(x), 1.0 / n);
}

Tensor mean_axis(const Tensor& x, int64_t axis) {
  axis = normalize_axis(axis, x.dim());
  const int64_t n = x.size(axis);
  int64_t outer = 1, inner = 1;
  for (int64_t k = 0; k < axis; ++k) outer *= x.size(k);
  for (int64_t k = axis + 1; k < x.dim(); ++k) inner *= x.size(k);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + axis);
  std::vector<real> y(static_cast<size_t>(outer * inner), 0.0);
  const auto& xv = x.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t t = 0; t < n; ++t)
      for (int64_t i = 0; i < inner; ++i) y[o * inner + i] += xv[(o * n + t) * inner + i];
  for (auto& v : y) v /= static_cast<real>(n);
  return make_result(std::move(out_shape), std::move(y), {x}, [outer, n, inner](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    const real w = 1.0 / static_cast<real>(n);
    for (int64_t o = 0; o < outer; ++o)
      for (int64_t t = 0; t < n; ++t)
        for (int64_t i = 0; i < inner; ++i)
          g[(o * n + t) * inner + i] += w * self.grad[o * inner + i];
  });
}

// ---- linear algebra ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.dim() != 2 || b.dim() != 2 || a.size(1) != b.size(0)) {
    fail(ErrorKind::kShapeMismatch, "matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const int64_t m = a.size(0), k = a.size(1), n = b.size(1);
  std::vector<real> y(static_cast<size_t>(m * n));
  detail::gemm(false, false, m, n, k, a.data().data(), b.data().data(), y.data(), false);
  return make_result({m, n}, std::move(y), {a, b}, [m, n, k](Node& self) {
    Node* na = self.inputs[0].get();
    Node* nb = self.inputs[1].get();
    if (na->requires_grad)
      detail::gemm(false, true, m, k, n, self.grad.data(), nb->value.data(),
                   na->ensure_grad().data(), true);
    if (nb->requires_grad)
      detail::gemm(true, false, k, n, m, na->value.data(), self.grad.data(),
                   nb->ensure_grad().data(), true);
  });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool trans_b) {
  if (a.dim() != 3 || b.dim() != 3 || a.size(0) != b.size(0) ||
      a.size(2) != (trans_b ? b.size(2) : b.size(1))) {
    fail(ErrorKind::kShapeMismatch, "bmm " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const int64_t batch = a.size(0), m = a.size(1), k = a.size(2);
  const int64_t n = trans_b ? b.size(1) : b.size(2);
  std::vector<real> y(static_cast<size_t>(batch * m * n));
  for (int64_t i = 0; i < batch; ++i)
    detail::gemm(false, trans_b, m, n, k, a.data().data() + i * m * k,
                 b.data().data() + i * k * n, y.data() + i * m * n, false);
  return make_result({batch, m, n}, std::move(y), {a, b}, [batch, m, n, k, trans_b](Node& self) {
    Node* na = self.inputs[0].get();
    Node* nb = self.inputs[1].get();
    for (int64_t i = 0; i < batch; ++i) {
      const real* dy = self.grad.data() + i * m * n;
      if (na->requires_grad) {
        // dA = dY * op(B)^T
        detail::gemm(false, !trans_b, m, k, n, dy, nb->value.data() + i * k * n,
                     na->ensure_grad().data() + i * m * k, true);
      }
      if (nb->requires_grad) {
        if (trans_b) {  // B is (n, k): dB = dY^T A
          detail::gemm(true, false, n, k, m, dy, na->value.data() + i * m * k,
                       nb->ensure_grad().data() + i * k * n, true);
        } else {  // dB = A^T dY
          detail::gemm(true, false, k, n, m, na->value.data() + i * m * k, dy,
                       nb->ensure_grad().data() + i * k * n, true);
        }
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const int64_t in = weight.size(1), out = weight.size(0);
  if (x.size(-1) != in) {
    fail(ErrorKind::kShapeMismatch, "linear: input " + shape_str(x.shape()) + " weight " +
                                        shape_str(weight.shape()));
  }
  const int64_t rows = x.numel() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out;
  std::vector<real> y(static_cast<size_t>(rows * out));
  detail::gemm(false, true, rows, out, in, x.data().data(), weight.data().data(), y.data(), false);
  const bool has_bias = bias.defined();
  if (has_bias) {
    const auto& b = bias.data();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t o = 0; o < out; ++o) y[r * out + o] += b[o];
  }
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result(std::move(out_shape), std::move(y), inputs, [rows, in, out](Node& self) {
    Node* nx = self.inputs[0].get();
    Node* nw = self.inputs[1].get();
    if (nx->requires_grad)
      detail::gemm(false, false, rows, in, out, self.grad.data(), nw->value.data(),
                   nx->ensure_grad().data(), true);
    if (nw->requires_grad)
      detail::gemm(true, false, out, in, rows, self.grad.data(), nx->value.data(),
                   nw->ensure_grad().data(), true);
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
      auto& g = self.inputs[2]->ensure_grad();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t o = 0; o < out; ++o) g[o] += self.grad[r * out + o];
    }
  });
}

// ---- normalisation -------------------------------------------------------

Tensor batch_norm(const Tensor& x, const Tensor& weight, const Tensor& bias,
                  Tensor& running_mean, Tensor& running_var, bool training, real momentum,
                  real eps) {
  if (x.dim() < 2) fail(ErrorKind::kShapeMismatch, "batch_norm needs (N, C, ...)");
  const int64_t n = x.size(0), c = x.size(1);
  const int64_t inner = x.numel() / (n * c);
  const int64_t count = n * inner;
  if (running_mean.numel() != c || running_var.numel() != c) {
    fail(ErrorKind::kShapeMismatch, "batch_norm: running stats size");
  }
  const auto& xv = x.data();
  std::vector<real> mu(c), invstd(c);
  if (training) {
    if (count < 2) fail(ErrorKind::kShapeMismatch, "batch_norm: need >1 value per channel");
    auto rm = running_mean.data();
    auto rv = running_var.data();
    for (int64_t ch = 0; ch < c; ++ch) {
      real s = 0;
      for (int64_t b = 0; b < n; ++b) {
        const real* p = xv.data() + (b * c + ch) * inner;
        for (int64_t i = 0; i < inner; ++i) s += p[i];
      }
      const real m = s / static_cast<real>(count);
      real ss = 0;
      for (int64_t b = 0; b < n; ++b) {
        const real* p = xv.data() + (b * c + ch) * inner;
        for (int64_t i = 0; i < inner; ++i) ss += (p[i] - m) * (p[i] - m);
      }
      const real var = ss / static_cast<real>(count);
      mu[ch] = m;
      invstd[ch] = 1.0 / std::sqrt(var + eps);
      rm[ch] = (1.0 - momentum) * rm[ch] + momentum * m;
      rv[ch] = (1.0 - momentum) * rv[ch] +
               momentum * ss / static_cast<real>(count - 1);
    }
  } else {
    const auto& rm = running_mean.data();
    const auto& rv = running_var.data();
    for (int64_t ch = 0; ch < c; ++ch) {
      mu[ch] = rm[ch];
      invstd[ch] = 1.0 / std::sqrt(rv[ch] + eps);
    }
  }
  const bool affine = weight.defined();
  std::vector<real> xhat(xv.size()), y(xv.size());
  for (int64_t b = 0; b < n; ++b)
    for (int64_t ch = 0; ch < c; ++ch) {
      const real g = affine ? weight.data()[ch] : 1.0;
      const real beta = affine ? bias.data()[ch] : 0.0;
      const int64_t base = (b * c + ch) * inner;
      for (int64_t i = 0; i < inner; ++i) {
        xhat[base + i] = (xv[base + i] - mu[ch]) * invstd[ch];
        y[base + i] = xhat[base + i] * g + beta;
      }
    }
  std::vector<Tensor> inputs{x};
  if (affine) {
    inputs.push_back(weight);
    inputs.push_back(bias);
  }
  return make_result(
      x.shape(), std::move(y), inputs,
      [n, c, inner, count, training, affine, invstd, xhat = std::move(xhat)](Node& self) {
        Node* nx = self.inputs[0].get();
        const real* dy = self.grad.data();
        for (int64_t ch = 0; ch < c; ++ch) {
          const real g = affine ? self.inputs[1]->value[ch] : 1.0;
          real sum_dy = 0, sum_dy_xhat = 0;
          for (int64_t b = 0; b < n; ++b) {
            const int64_t base = (b * c + ch) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              sum_dy += dy[base + i];
              sum_dy_xhat += dy[base + i] * xhat[base + i];
            }
          }
          if (affine) {
            if (self.inputs[1]->requires_grad) self.inputs[1]->ensure_grad()[ch] += sum_dy_xhat;
            if (self.inputs[2]->requires_grad) self.inputs[2]->ensure_grad()[ch] += sum_dy;
          }
          if (!nx->requires_grad) continue;
          auto& gx = nx->ensure_grad();
          const real k = g * invstd[ch];
          const real inv_count = 1.0 / static_cast<real>(count);
          for (int64_t b = 0; b < n; ++b) {
            const int64_t base = (b * c + ch) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              if (training) {
                gx[base + i] += k * (dy[base + i] - inv_count * sum_dy -
                                     xhat[base + i] * inv_count * sum_dy_xhat);
              } else {
                gx[base + i] += k * dy[base + i];
              }
            }
          }
        }
      });
}

Tensor layer_norm(const Tensor& x, const Tensor& weight, const Tensor& bias, real eps) {
  const int64_t d = x.size(-1);
  if (weight.numel() != d || bias.numel() != d) fail(ErrorKind::kShapeMismatch, "layer_norm");
  const int64_t rows = x.numel() / d;
  const auto& xv = x.data();
  const auto& w = weight.data();
  const auto& bv = bias.data();
  std::vector<real> xhat(xv.size()), y(xv.size()), invstd(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const real* p = xv.data() + r * d;
    real m = 0;
    for (int64_t i = 0; i < d; ++i) m += p[i];
    m /= static_cast<real>(d);
    real v = 0;
    for (int64_t i = 0; i < d; ++i) v += (p[i] - m) * (p[i] - m);
    v /= static_cast<real>(d);
    invstd[r] = 1.0 / std::sqrt(v + eps);
    for (int64_t i = 0; i < d; ++i) {
      xhat[r * d + i] = (p[i] - m) * invstd[r];
      y[r * d + i] = xhat[r * d + i] * w[i] + bv[i];
    }
  }
  return make_result(
      x.shape(), std::move(y), {x, weight, bias},
      [rows, d, invstd = std::move(invstd), xhat = std::move(xhat)](Node& self) {
        Node* nx = self.inputs[0].get();
        Node* nw = self.inputs[1].get();
        Node* nb = self.inputs[2].get();
        const real* dy = self.grad.data();
        std::vector<real> dxhat(d);
        for (int64_t r = 0; r < rows; ++r) {
          real s1 = 0, s2 = 0;
          for (int64_t i = 0; i < d; ++i) {
            const real g = dy[r * d + i];
            if (nw->requires_grad) nw->ensure_grad()[i] += g * xhat[r * d + i];
            if (nb->requires_grad) nb->ensure_grad()[i] += g;
            dxhat[i] = g * nw->value[i];
            s1 += dxhat[i];
            s2 += dxhat[i] * xhat[r * d + i];
          }
          if (!nx->requires_grad) continue;
          auto& gx = nx->ensure_grad();
          const real inv_d = 1.0 / static_cast<real>(d);
          for (int64_t i = 0; i < d; ++i)
            gx[r * d + i] += invstd[r] * (dxhat[i] - inv_d * s1 - xhat[r * d + i] * inv_d * s2);
        }
      });
}

Tensor softmax_last(const Tensor& x) {
  const int64_t d = x.size(-1);
  const int64_t rows = x.numel() / d;
  const auto& xv = x.data();
  std::vector<real> y(xv.size());
  for (int64_t r = 0; r < rows; ++r) {
    const real* p = xv.data() + r * d;
    const real m = *std::max_element(p, p + d);
    real s = 0;
    for (int64_t i = 0; i < d; ++i) {
      y[r * d + i] = std::exp(p[i] - m);
      s += y[r * d + i];
    }
    for (int64_t i = 0; i < d; ++i) y[r * d + i] /= s;
  }
  return make_result(x.shape(), std::move(y), {x}, [rows, d](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) {
      const real* yv = self.value.data() + r * d;
      const real* dy = self.grad.data() + r * d;
      real dot = 0;
      for (int64_t i = 0; i < d; ++i) dot += dy[i] * yv[i];
      for (int64_t i = 0; i < d; ++i) g[r * d + i] += yv[i] * (dy[i] - dot);
    }
  });
}

Tensor dropout(const Tensor& x, real p, Rng& rng, bool training) {
  if (!training || p <= 0.0) return x;
  const real keep = 1.0 - p;
  std::vector<real> mask(static_cast<size_t>(x.numel()));
  for (auto& m : mask) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  std::vector<real> y(mask.size());
  const auto& xv = x.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * mask[i];
  return make_result(x.shape(), std::move(y), {x}, [mask = std::move(mask)](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

// ---- losses --------------------------------------------------------------

Tensor bce_with_logits(const Tensor& logits, std::span<const real> targets) {
  if (logits.numel() != static_cast<int64_t>(targets.size())) {
    fail(ErrorKind::kShapeMismatch, "bce_with_logits: logits/targets size");
  }
  const auto& z = logits.data();
  const size_t n = targets.size();
  std::vector<real> t(targets.begin(), targets.end());
  real loss = 0;
  for (size_t i = 0; i < n; ++i)
    loss += std::max(z[i], 0.0) - z[i] * t[i] + std::log1p(std::exp(-std::abs(z[i])));
  loss /= static_cast<real>(n);
  return make_result(Shape{}, {loss}, {logits}, [t = std::move(t)](Node& self) {
    Node* in = self.inputs[0].get();
    auto& g = in->ensure_grad();
    const real w = self.grad[0] / static_cast<real>(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
      const real zi = in->value[i];
      const real s = zi >= 0 ? 1.0 / (1.0 + std::exp(-zi)) : std::exp(zi) / (1.0 + std::exp(zi));
      g[i] += w * (s - t[i]);
    }
  });
}

}  // namespace dfw::nn
