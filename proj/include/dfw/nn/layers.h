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

#include <string>

#include "dfw/common/rng.h"
#include "dfw/nn/module.h"
#include "dfw/nn/ops.h"

namespace dfw::nn {

// Default initialisation follows the PyTorch layer defaults (uniform with
// bound 1/sqrt(fan_in)) drawn from the supplied generator.

class Linear : public Module {
 public:
  Linear(int64_t in, int64_t out, Rng& rng, bool bias = true);
  Tensor forward(const Tensor& x) const { return linear(x, weight, bias); }
  Tensor weight, bias;
};

class Conv2d : public Module {
 public:
  Conv2d(int64_t in, int64_t out, int64_t kernel, Rng& rng, Conv2dGeometry geometry = {},
         bool bias = true);
  Tensor forward(const Tensor& x) const { return conv2d(x, weight, bias, geometry_); }
  Tensor weight, bias;

 private:
  Conv2dGeometry geometry_;
};

class Conv1d : public Module {
 public:
  Conv1d(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t padding, Rng& rng);
  Tensor forward(const Tensor& x) const { return conv1d(x, weight, bias, stride_, padding_); }
  Tensor weight, bias;

 private:
  int64_t stride_, padding_;
};

class BatchNorm : public Module {
 public:
  explicit BatchNorm(int64_t channels, bool affine = true);
  Tensor forward(const Tensor& x) {
    return batch_norm(x, weight, bias, running_mean, running_var, training());
  }
  Tensor weight, bias, running_mean, running_var;
};

class LayerNorm : public Module {
 public:
  explicit LayerNorm(int64_t width);
  Tensor forward(const Tensor& x) const { return layer_norm(x, weight, bias); }
  Tensor weight, bias;
};

enum class RnnKind { kLstm, kGru };

/// Stacked bidirectional recurrent layers over (B, T, I), PyTorch naming
/// (weight_ih_l0, weight_ih_l0_reverse, ...).
class BiRnn : public Module {
 public:
  BiRnn(RnnKind kind, int64_t input, int64_t hidden, int64_t layers, Rng& rng);
  Tensor forward(const Tensor& x) const;
  int64_t hidden() const { return hidden_; }

 private:
  RnnKind kind_;
  int64_t hidden_;
  std::vector<RnnWeights> forward_, reverse_;
};

}  // namespace dfw::nn
