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

#include "dfw/nn/layers.h"

#include <cmath>

#include "dfw/common/error.h"

namespace dfw::nn {
namespace {

Tensor uniform(Shape shape, real bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

Linear::Linear(int64_t in, int64_t out, Rng& rng, bool with_bias) {
  if (in <= 0 || out <= 0) fail(ErrorKind::kBadConfig, "Linear: sizes must be positive");
  const real bound = 1.0 / std::sqrt(static_cast<real>(in));
  weight = register_parameter("weight", uniform({out, in}, bound, rng));
  if (with_bias) bias = register_parameter("bias", uniform({out}, bound, rng));
}

Conv2d::Conv2d(int64_t in, int64_t out, int64_t kernel, Rng& rng, Conv2dGeometry geometry,
               bool with_bias)
    : geometry_(geometry) {
  if (in <= 0 || out <= 0 || kernel <= 0) fail(ErrorKind::kBadConfig, "Conv2d: bad sizes");
  const real bound = 1.0 / std::sqrt(static_cast<real>(in * kernel * kernel));
  weight = register_parameter("weight", uniform({out, in, kernel, kernel}, bound, rng));
  if (with_bias) bias = register_parameter("bias", uniform({out}, bound, rng));
}

Conv1d::Conv1d(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t padding,
               Rng& rng)
    : stride_(stride), padding_(padding) {
  const real bound = 1.0 / std::sqrt(static_cast<real>(in * kernel));
  weight = register_parameter("weight", uniform({out, in, kernel}, bound, rng));
  bias = register_parameter("bias", uniform({out}, bound, rng));
}

BatchNorm::BatchNorm(int64_t channels, bool affine) {
  if (affine) {
    weight = register_parameter("weight", Tensor({channels}, 1.0));
    bias = register_parameter("bias", Tensor({channels}, 0.0));
  }
  running_mean = register_buffer("running_mean", Tensor({channels}, 0.0));
  running_var = register_buffer("running_var", Tensor({channels}, 1.0));
}

LayerNorm::LayerNorm(int64_t width) {
  weight = register_parameter("weight", Tensor({width}, 1.0));
  bias = register_parameter("bias", Tensor({width}, 0.0));
}

BiRnn::BiRnn(RnnKind kind, int64_t input, int64_t hidden, int64_t layers, Rng& rng)
    : kind_(kind), hidden_(hidden) {
  if (input <= 0 || hidden <= 0 || layers <= 0) fail(ErrorKind::kBadConfig, "BiRnn: bad sizes");
  const int64_t gates = (kind == RnnKind::kLstm ? 4 : 3) * hidden;
  const real bound = 1.0 / std::sqrt(static_cast<real>(hidden));
  for (int64_t l = 0; l < layers; ++l) {
    const int64_t in = l == 0 ? input : 2 * hidden;
    for (int dir = 0; dir < 2; ++dir) {
      const std::string sfx = "_l" + std::to_string(l) + (dir == 1 ? "_reverse" : "");
      RnnWeights w;
      w.w_ih = register_parameter("weight_ih" + sfx, uniform({gates, in}, bound, rng));
      w.w_hh = register_parameter("weight_hh" + sfx, uniform({gates, hidden}, bound, rng));
      w.b_ih = register_parameter("bias_ih" + sfx, uniform({gates}, bound, rng));
      w.b_hh = register_parameter("bias_hh" + sfx, uniform({gates}, bound, rng));
      (dir == 0 ? forward_ : reverse_).push_back(w);
    }
  }
}

Tensor BiRnn::forward(const Tensor& x) const {
  Tensor h = x;
  for (size_t l = 0; l < forward_.size(); ++l)
    h = kind_ == RnnKind::kLstm ? lstm_bidirectional(h, forward_[l], reverse_[l])
                                : gru_bidirectional(h, forward_[l], reverse_[l]);
  return h;
}

}  // namespace dfw::nn
