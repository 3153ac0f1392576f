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

#include <vector>

#include "dfw/nn/tensor.h"

namespace dfw::nn {

/// Adam with decoupled weight decay. Parameters whose requires_grad flag is
/// off at step time are skipped entirely (no decay, no moment update).
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, real lr, real weight_decay, real beta1 = 0.9,
        real beta2 = 0.999, real eps = 1e-8);

  void step();
  void zero_grad();
  void set_lr(real lr) { lr_ = lr; }
  real lr() const { return lr_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<real>> m_, v_;
  std::vector<int64_t> steps_;
  real lr_, weight_decay_, beta1_, beta2_, eps_;
};

}  // namespace dfw::nn
