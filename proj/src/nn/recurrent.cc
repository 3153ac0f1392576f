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

#include <cmath>

#include "dfw/common/error.h"
#include "dfw/nn/ops.h"
#include "gemm.h"

namespace dfw::nn {
namespace {

inline real sigm(real x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

enum class Cell { kLstm, kGru };

/// Saved activations of one direction, rows indexed by b * T + t.
struct DirectionTape {
  std::vector<real> gates;   // LSTM: i,f,g,o (4H). GRU: r,z,n,hn (4H)
  std::vector<real> cell;    // LSTM: c_t, tanh(c_t) interleaved as 2H; unused for GRU
  std::vector<real> h_prev;  // H
  std::vector<real> c_prev;  // LSTM only, H
};

struct Dims {
  int64_t b, t, in, h;
};

void check_weights(const RnnWeights& w, int64_t gates, const Dims& d, const char* name) {
  if (w.w_ih.dim() != 2 || w.w_ih.size(0) != gates * d.h || w.w_ih.size(1) != d.in ||
      w.w_hh.dim() != 2 || w.w_hh.size(0) != gates * d.h || w.w_hh.size(1) != d.h ||
      w.b_ih.numel() != gates * d.h || w.b_hh.numel() != gates * d.h) {
    fail(ErrorKind::kShapeMismatch, std::string(name) + ": weight shapes do not match input " +
                                        std::to_string(d.in) + " / hidden " + std::to_string(d.h));
  }
}

/// Runs one direction forward, writing h into out (B, T, 2H) at column offset.
DirectionTape run_direction(Cell cell, const Dims& d, bool reverse, const real* x,
                            const real* w_ih, const real* w_hh, const real* b_ih,
                            const real* b_hh, real* out, int64_t col_offset) {
  const int64_t g = (cell == Cell::kLstm ? 4 : 3) * d.h;
  const int64_t rows = d.b * d.t;
  std::vector<real> xg(static_cast<size_t>(rows * g));
  detail::gemm(false, true, rows, g, d.in, x, w_ih, xg.data(), false);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t k = 0; k < g; ++k) {
      xg[r * g + k] += b_ih[k];
      if (cell == Cell::kLstm) xg[r * g + k] += b_hh[k];
    }

  DirectionTape tape;
  tape.gates.resize(static_cast<size_t>(rows * 4 * d.h));
  tape.h_prev.resize(static_cast<size_t>(rows * d.h));
  if (cell == Cell::kLstm) {
    tape.cell.resize(static_cast<size_t>(rows * 2 * d.h));
    tape.c_prev.resize(static_cast<size_t>(rows * d.h));
  }
  std::vector<real> h(static_cast<size_t>(d.b * d.h), 0.0), c(h.size(), 0.0);
  std::vector<real> hg(static_cast<size_t>(d.b * g));
  for (int64_t s = 0; s < d.t; ++s) {
    const int64_t t = reverse ? d.t - 1 - s : s;
    detail::gemm(false, true, d.b, g, d.h, h.data(), w_hh, hg.data(), false);
    for (int64_t bi = 0; bi < d.b; ++bi) {
      const int64_t row = bi * d.t + t;
      real* hp = tape.h_prev.data() + row * d.h;
      std::copy_n(h.begin() + bi * d.h, d.h, hp);
      const real* xr = xg.data() + row * g;
      const real* hr = hg.data() + bi * g;
      real* gs = tape.gates.data() + row * 4 * d.h;
      real* hb = h.data() + bi * d.h;
      if (cell == Cell::kLstm) {
        real* cb = c.data() + bi * d.h;
        std::copy_n(cb, d.h, tape.c_prev.data() + row * d.h);
        real* cs = tape.cell.data() + row * 2 * d.h;
        for (int64_t k = 0; k < d.h; ++k) {
          const real ig = sigm(xr[k] + hr[k]);
          const real fg = sigm(xr[d.h + k] + hr[d.h + k]);
          const real gg = std::tanh(xr[2 * d.h + k] + hr[2 * d.h + k]);
          const real og = sigm(xr[3 * d.h + k] + hr[3 * d.h + k]);
          const real cn = fg * cb[k] + ig * gg;
          const real tc = std::tanh(cn);
          gs[k] = ig;
          gs[d.h + k] = fg;
          gs[2 * d.h + k] = gg;
          gs[3 * d.h + k] = og;
          cs[k] = cn;
          cs[d.h + k] = tc;
          cb[k] = cn;
          hb[k] = og * tc;
        }
      } else {
        for (int64_t k = 0; k < d.h; ++k) {
          const real hn = hr[2 * d.h + k] + b_hh[2 * d.h + k];
          const real rg = sigm(xr[k] + hr[k] + b_hh[k]);
          const real zg = sigm(xr[d.h + k] + hr[d.h + k] + b_hh[d.h + k]);
          const real ng = std::tanh(xr[2 * d.h + k] + rg * hn);
          gs[k] = rg;
          gs[d.h + k] = zg;
          gs[2 * d.h + k] = ng;
          gs[3 * d.h + k] = hn;
          hb[k] = (1.0 - zg) * ng + zg * hp[k];
        }
      }
      std::copy_n(hb, d.h, out + row * 2 * d.h + col_offset);
    }
  }
  return tape;
}

void backward_direction(Cell cell, const Dims& d, bool reverse, const DirectionTape& tape,
                        const real* dy, int64_t col_offset, Node* x, Node* w_ih, Node* w_hh,
                        Node* b_ih, Node* b_hh) {
  const int64_t g = (cell == Cell::kLstm ? 4 : 3) * d.h;
  const int64_t rows = d.b * d.t;
  std::vector<real> dxg(static_cast<size_t>(rows * g), 0.0);
  std::vector<real> dhg(cell == Cell::kGru ? static_cast<size_t>(rows * g) : 0, 0.0);
  std::vector<real> dh_next(static_cast<size_t>(d.b * d.h), 0.0), dc_next(dh_next.size(), 0.0);
  std::vector<real> step(static_cast<size_t>(d.b * g));
  const real* whh = w_hh->value.data();
  for (int64_t s = d.t - 1; s >= 0; --s) {
    const int64_t t = reverse ? d.t - 1 - s : s;
    for (int64_t bi = 0; bi < d.b; ++bi) {
      const int64_t row = bi * d.t + t;
      const real* gs = tape.gates.data() + row * 4 * d.h;
      const real* dyr = dy + row * 2 * d.h + col_offset;
      real* dhn = dh_next.data() + bi * d.h;
      real* st = step.data() + bi * g;
      if (cell == Cell::kLstm) {
        const real* cs = tape.cell.data() + row * 2 * d.h;
        const real* cp = tape.c_prev.data() + row * d.h;
        real* dcn = dc_next.data() + bi * d.h;
        real* dx_row = dxg.data() + row * g;
        for (int64_t k = 0; k < d.h; ++k) {
          const real ig = gs[k], fg = gs[d.h + k], gg = gs[2 * d.h + k], og = gs[3 * d.h + k];
          const real tc = cs[d.h + k];
          const real dh = dyr[k] + dhn[k];
          const real dc = dcn[k] + dh * og * (1.0 - tc * tc);
          dx_row[k] = dc * gg * ig * (1.0 - ig);
          dx_row[d.h + k] = dc * cp[k] * fg * (1.0 - fg);
          dx_row[2 * d.h + k] = dc * ig * (1.0 - gg * gg);
          dx_row[3 * d.h + k] = dh * tc * og * (1.0 - og);
          dcn[k] = dc * fg;
        }
        std::copy_n(dx_row, g, st);
      } else {
        const real* hp = tape.h_prev.data() + row * d.h;
        real* dx_row = dxg.data() + row * g;
        real* dh_row = dhg.data() + row * g;
        for (int64_t k = 0; k < d.h; ++k) {
          const real rg = gs[k], zg = gs[d.h + k], ng = gs[2 * d.h + k], hn = gs[3 * d.h + k];
          const real dh = dyr[k] + dhn[k];
          const real dn_pre = dh * (1.0 - zg) * (1.0 - ng * ng);
          const real dz_pre = dh * (hp[k] - ng) * zg * (1.0 - zg);
          const real dr_pre = dn_pre * hn * rg * (1.0 - rg);
          dx_row[k] = dr_pre;
          dx_row[d.h + k] = dz_pre;
          dx_row[2 * d.h + k] = dn_pre;
          dh_row[k] = dr_pre;
          dh_row[d.h + k] = dz_pre;
          dh_row[2 * d.h + k] = dn_pre * rg;
          dhn[k] = dh * zg;  // direct path, recurrent path added below
        }
        std::copy_n(dh_row, g, st);
      }
    }
    if (cell == Cell::kLstm) std::fill(dh_next.begin(), dh_next.end(), 0.0);
    // dh_prev += dgates_h * W_hh
    detail::gemm(false, false, d.b, d.h, g, step.data(), whh, dh_next.data(), true);
  }

  const std::vector<real>& dh_gates = cell == Cell::kLstm ? dxg : dhg;
  if (x->requires_grad)
    detail::gemm(false, false, rows, d.in, g, dxg.data(), w_ih->value.data(),
                 x->ensure_grad().data(), true);
  if (w_ih->requires_grad)
    detail::gemm(true, false, g, d.in, rows, dxg.data(), x->value.data(),
                 w_ih->ensure_grad().data(), true);
  if (w_hh->requires_grad)
    detail::gemm(true, false, g, d.h, rows, dh_gates.data(), tape.h_prev.data(),
                 w_hh->ensure_grad().data(), true);
  auto colsum = [&](const std::vector<real>& m, Node* dst) {
    if (!dst->requires_grad) return;
    auto& gd = dst->ensure_grad();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t k = 0; k < g; ++k) gd[k] += m[r * g + k];
  };
  colsum(dxg, b_ih);
  colsum(dh_gates, b_hh);
}

Tensor recurrent_bidirectional(Cell cell, const Tensor& x, const RnnWeights& fwd,
                               const RnnWeights& rev) {
  if (x.dim() != 3) fail(ErrorKind::kShapeMismatch, "recurrent layer needs (B, T, I)");
  const int64_t gates = cell == Cell::kLstm ? 4 : 3;
  Dims d{x.size(0), x.size(1), x.size(2), fwd.w_hh.size(1)};
  const char* name = cell == Cell::kLstm ? "lstm" : "gru";
  check_weights(fwd, gates, d, name);
  check_weights(rev, gates, d, name);
  std::vector<real> y(static_cast<size_t>(d.b * d.t * 2 * d.h));
  auto tapes = std::make_shared<std::array<DirectionTape, 2>>();
  const RnnWeights* dirs[2] = {&fwd, &rev};
  for (int k = 0; k < 2; ++k) {
    const RnnWeights& w = *dirs[k];
    (*tapes)[k] = run_direction(cell, d, k == 1, x.data().data(), w.w_ih.data().data(),
                                w.w_hh.data().data(), w.b_ih.data().data(), w.b_hh.data().data(),
                                y.data(), k * d.h);
  }
  std::vector<Tensor> inputs{x,        fwd.w_ih, fwd.w_hh, fwd.b_ih, fwd.b_hh,
                             rev.w_ih, rev.w_hh, rev.b_ih, rev.b_hh};
  return make_result({d.b, d.t, 2 * d.h}, std::move(y), inputs, [cell, d, tapes](Node& self) {
    for (int k = 0; k < 2; ++k) {
      const int base = 1 + 4 * k;
      backward_direction(cell, d, k == 1, (*tapes)[k], self.grad.data(), k * d.h,
                         self.inputs[0].get(), self.inputs[base].get(),
                         self.inputs[base + 1].get(), self.inputs[base + 2].get(),
                         self.inputs[base + 3].get());
    }
  });
}

}  // namespace

Tensor lstm_bidirectional(const Tensor& x, const RnnWeights& forward, const RnnWeights& reverse) {
  return recurrent_bidirectional(Cell::kLstm, x, forward, reverse);
}

Tensor gru_bidirectional(const Tensor& x, const RnnWeights& forward, const RnnWeights& reverse) {
  return recurrent_bidirectional(Cell::kGru, x, forward, reverse);
}

}  // namespace dfw::nn
