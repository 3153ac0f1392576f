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

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dfw/nn/tensor.h"

namespace dfw::nn {

/// Named registry of parameters, buffers and child modules. Names compose
/// with '.' like PyTorch state dicts so checkpoints map one to one.
class Module {
 public:
  virtual ~Module() = default;
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  void train(bool on = true);
  void eval() { train(false); }
  bool training() const { return training_; }

  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_buffers() const;
  /// Parameters followed by buffers; the checkpoint payload.
  std::vector<std::pair<std::string, Tensor>> state() const;
  std::vector<Tensor> parameters() const;

  /// Sum of parameter element counts (buffers excluded).
  int64_t count_params() const;
  void set_requires_grad(bool flag);
  void zero_grad();

 protected:
  Tensor register_parameter(const std::string& name, Tensor t);
  Tensor register_buffer(const std::string& name, Tensor t);
  template <class M>
  std::shared_ptr<M> register_module(const std::string& name, std::shared_ptr<M> m) {
    children_.emplace_back(name, m);
    return m;
  }

 private:
  void collect(const std::string& prefix, bool params,
               std::vector<std::pair<std::string, Tensor>>& out) const;

  bool training_ = true;
  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<std::pair<std::string, Tensor>> buffers_;
  std::vector<std::pair<std::string, std::shared_ptr<Module>>> children_;
};

/// Plain container of named children (ModuleList / Sequential naming).
class ModuleList : public Module {
 public:
  template <class M>
  std::shared_ptr<M> add(const std::string& name, std::shared_ptr<M> m) {
    return register_module(name, std::move(m));
  }
};

/// Fills every parameter and buffer from a hash of (seed, full name), so
/// weights are independent of construction order and reproducible from other
/// languages. Weights of rank >= 2 draw from U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// vectors from U(-0.1, 0.1); running variances from U(0.5, 1.5).
void fill_deterministic(Module& m, uint64_t seed);

/// U(lo, hi) stream keyed by a name; shared with the fixture generators.
std::vector<real> hashed_uniform(uint64_t seed, const std::string& name, int64_t n, real lo,
                                 real hi);

}  // namespace dfw::nn
