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
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dfw::nn {

using real = double;
using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// One vertex of the dynamic autograd graph. `backward` reads `grad` of this
/// node and accumulates into the grads of `inputs`.
struct Node {
  Shape shape;
  std::vector<real> value;
  std::vector<real> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::vector<real>& ensure_grad();
};

/// Dense row-major tensor with reverse-mode differentiation. Copies share
/// storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, real fill = 0.0);
  Tensor(Shape shape, std::vector<real> values);

  static Tensor scalar(real value) { return Tensor(Shape{}, std::vector<real>{value}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t dim() const { return static_cast<int64_t>(node_->shape.size()); }
  int64_t size(int64_t axis) const;
  int64_t numel() const { return static_cast<int64_t>(node_->value.size()); }

  std::span<real> data() { return node_->value; }
  std::span<const real> data() const { return node_->value; }
  real item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool flag);
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  /// Gradient accumulated by backward(); all zeros when none was accumulated.
  std::vector<real> grad() const;
  std::span<real> grad_span() { return node_->ensure_grad(); }
  void zero_grad();

  /// Back-propagates from a scalar (seed 1) or with an explicit seed.
  void backward();
  void backward(std::span<const real> seed);

  Tensor detach() const;
  Tensor clone() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;

  friend Tensor make_result(Shape, std::vector<real>, std::initializer_list<Tensor>,
                            std::function<void(Node&)>);
  friend Tensor make_result(Shape, std::vector<real>, const std::vector<Tensor>&,
                            std::function<void(Node&)>);
};

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op output. The graph edge is recorded only when grad mode is on
/// and at least one input requires grad.
Tensor make_result(Shape shape, std::vector<real> values, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward);
Tensor make_result(Shape shape, std::vector<real> values, const std::vector<Tensor>& inputs,
                   std::function<void(Node&)> backward);

}  // namespace dfw::nn
