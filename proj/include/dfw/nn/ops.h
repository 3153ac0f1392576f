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

#pragma once

#include <span>
#include <vector>

#include "dfw/common/rng.h"
#include "dfw/nn/tensor.h"

namespace dfw::nn {

// ---- elementwise ---------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, real factor);
Tensor add_scalar(const Tensor& a, real value);
Tensor square(const Tensor& a);
/// log(a + eps)
Tensor log_eps(const Tensor& a, real eps);
/// log10(max(a, floor))
Tensor log10_floor(const Tensor& a, real floor);
/// max(a, max(a) - range), the dynamic-range clamp of the Whisper recipe.
Tensor clamp_below_global_max(const Tensor& a, real range);

Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, real slope);
Tensor selu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor gelu(const Tensor& a);

/// x + bias broadcast along `axis` (bias has x.size(axis) entries).
Tensor add_bias(const Tensor& x, const Tensor& bias, int64_t axis);
/// Broadcasts y (B, C) to `like` (B, C, ...).
Tensor expand_channels(const Tensor& y, const Shape& like);

// ---- shape ---------------------------------------------------------------
Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<int64_t>& perm);
Tensor concat(const std::vector<Tensor>& parts, int64_t axis);
Tensor slice(const Tensor& x, int64_t axis, int64_t start, int64_t length);
/// Cyclic tiling along `axis` up to `length` entries: out[.., t, ..] = x[.., t mod n, ..].
Tensor tile_axis(const Tensor& x, int64_t axis, int64_t length);

// ---- reductions ----------------------------------------------------------
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean over one axis; the axis is removed.
Tensor mean_axis(const Tensor& x, int64_t axis);

// ---- linear algebra ------------------------------------------------------
/// (M, K) x (K, N)
Tensor matmul(const Tensor& a, const Tensor& b);
/// (B, M, K) x (B, K, N), or x (B, N, K)^T when trans_b.
Tensor bmm(const Tensor& a, const Tensor& b, bool trans_b = false);
/// x (..., in) W^T + b, with W (out, in). `bias` may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// ---- convolution & pooling -----------------------------------------------
struct Conv2dGeometry {
  int64_t stride_h = 1, stride_w = 1;
  int64_t pad_h = 0, pad_w = 0;
  int64_t dilation_h = 1, dilation_w = 1;
};

/// x (N, C, H, W), weight (O, C, KH, KW), bias (O) or undefined.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dGeometry& geometry = {});
/// x (N, C, L), weight (O, C, K).
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int64_t stride,
              int64_t padding);
/// Non-overlapping max pooling (stride == kernel, floor mode).
Tensor max_pool2d(const Tensor& x, int64_t kernel_h, int64_t kernel_w);
/// Output size -1 keeps that dimension.
Tensor adaptive_avg_pool2d(const Tensor& x, int64_t out_h, int64_t out_w);
/// x (B, L) -> (B, out)
Tensor adaptive_avg_pool1d(const Tensor& x, int64_t out);
/// Max-feature-map: elementwise max of the two channel halves.
Tensor max_feature_map(const Tensor& x);

// ---- normalisation -------------------------------------------------------
/// x (N, C, ...). weight/bias may be undefined (affine=false). Running stats
/// are updated in place when training.
Tensor batch_norm(const Tensor& x, const Tensor& weight, const Tensor& bias,
                  Tensor& running_mean, Tensor& running_var, bool training,
                  real momentum = 0.1, real eps = 1e-5);
Tensor layer_norm(const Tensor& x, const Tensor& weight, const Tensor& bias, real eps = 1e-5);
Tensor softmax_last(const Tensor& x);
Tensor dropout(const Tensor& x, real p, Rng& rng, bool training);

// ---- losses --------------------------------------------------------------
/// Mean binary cross-entropy of logits (B) against targets in {0, 1}.
Tensor bce_with_logits(const Tensor& logits, std::span<const real> targets);

// ---- recurrent -----------------------------------------------------------
struct RnnWeights {
  Tensor w_ih, w_hh, b_ih, b_hh;
};

/// Bidirectional single-layer LSTM (PyTorch gate order i, f, g, o).
/// x (B, T, I) -> (B, T, 2H), forward half first.
Tensor lstm_bidirectional(const Tensor& x, const RnnWeights& forward, const RnnWeights& reverse);
/// Bidirectional single-layer GRU (PyTorch gate order r, z, n).
Tensor gru_bidirectional(const Tensor& x, const RnnWeights& forward, const RnnWeights& reverse);

// ---- signal --------------------------------------------------------------
/// Reflect padding of the last axis (numpy "reflect", edge sample not repeated).
Tensor reflect_pad(const Tensor& x, int64_t left, int64_t right);
/// Frames of the last axis: out[..., f, k] = x[..., offset + f * hop + k].
Tensor frame(const Tensor& x, int64_t frame_length, int64_t hop, int64_t n_frames,
             int64_t offset = 0);
/// |rfft(frames * window)|^2 over the last axis: (..., L) -> (..., L/2 + 1).
/// The window is a constant of length L.
Tensor power_spectrum(const Tensor& frames, std::span<const real> window);
/// Regression deltas along the last axis, window +-2, edge replication.
Tensor deltas(const Tensor& x);

}  // namespace dfw::nn
