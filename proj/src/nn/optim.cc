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

#include "dfw/nn/optim.h"

#include <cmath>

namespace dfw::nn {

AdamW::AdamW(std::vector<Tensor> params, real lr, real weight_decay, real beta1, real beta2,
             real eps)
    : params_(std::move(params)),
      m_(params_.size()),
      v_(params_.size()),
      steps_(params_.size(), 0),
      lr_(lr),
      weight_decay_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void AdamW::step() {
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.requires_grad() || !p.has_grad()) continue;
    auto& m = m_[i];
    auto& v = v_[i];
    if (m.empty()) {
      m.assign(static_cast<size_t>(p.numel()), 0.0);
      v.assign(m.size(), 0.0);
    }
    const int64_t t = ++steps_[i];
    const real c1 = 1.0 - std::pow(beta1_, static_cast<real>(t));
    const real c2 = 1.0 - std::pow(beta2_, static_cast<real>(t));
    auto w = p.data();
    auto g = p.grad_span();
    for (size_t k = 0; k < m.size(); ++k) {
      w[k] *= 1.0 - lr_ * weight_decay_;
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      w[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace dfw::nn
