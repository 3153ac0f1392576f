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

#include "dfw/nn/tensor.h"

#include <sstream>
#include <unordered_set>

#include "dfw/common/error.h"

namespace dfw::nn {
namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

std::vector<real>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, real fill) : node_(std::make_shared<Node>()) {
  node_->value.assign(static_cast<size_t>(shape_numel(shape)), fill);
  node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<real> values) : node_(std::make_shared<Node>()) {
  if (static_cast<int64_t>(values.size()) != shape_numel(shape)) {
    fail(ErrorKind::kShapeMismatch, "tensor of shape " + shape_str(shape) + " given " +
                                        std::to_string(values.size()) + " values");
  }
  node_->value = std::move(values);
  node_->shape = std::move(shape);
}

int64_t Tensor::size(int64_t axis) const {
  const int64_t d = dim();
  if (axis < 0) axis += d;
  if (axis < 0 || axis >= d) fail(ErrorKind::kShapeMismatch, "axis out of range");
  return node_->shape[static_cast<size_t>(axis)];
}

real Tensor::item() const {
  if (numel() != 1) fail(ErrorKind::kShapeMismatch, "item() on " + shape_str(shape()));
  return node_->value[0];
}

Tensor& Tensor::set_requires_grad(bool flag) {
  node_->requires_grad = flag;
  return *this;
}

std::vector<real> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<real>(node_->value.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() {
  if (numel() != 1) fail(ErrorKind::kShapeMismatch, "backward() needs a scalar root");
  const real one = 1.0;
  backward(std::span<const real>(&one, 1));
}

void Tensor::backward(std::span<const real> seed) {
  if (static_cast<int64_t>(seed.size()) != numel()) {
    fail(ErrorKind::kShapeMismatch, "backward seed size mismatch");
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  // Shared ownership keeps interior nodes alive while their consumers release
  // the tape below.
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<std::shared_ptr<Node>, size_t>> stack{{node_, 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.second < top.first->inputs.size()) {
      std::shared_ptr<Node> child = top.first->inputs[top.second++];
      if (child->requires_grad && seen.insert(child.get()).second)
        stack.emplace_back(std::move(child), 0);
    } else {
      order.push_back(std::move(top.first));
      stack.pop_back();
    }
  }

  auto& g = node_->ensure_grad();
  for (size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = it->get();
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
      // Interior nodes are single-use: release the tape as we go.
      n->backward = nullptr;
      n->inputs.clear();
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<Node>();
  n->shape = node_->shape;
  n->value = node_->value;
  return Tensor(std::move(n));
}

Tensor Tensor::clone() const { return detach(); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(Shape shape, std::vector<real> values, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward) {
  return make_result(std::move(shape), std::move(values), std::vector<Tensor>(inputs),
                     std::move(backward));
}

Tensor make_result(Shape shape, std::vector<real> values, const std::vector<Tensor>& inputs,
                   std::function<void(Node&)> backward) {
  if (static_cast<int64_t>(values.size()) != shape_numel(shape)) {
    fail(ErrorKind::kShapeMismatch, "op produced " + std::to_string(values.size()) +
                                        " values for shape " + shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (g_grad_enabled) {
    bool any = false;
    for (const Tensor& t : inputs) any = any || t.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const Tensor& t : inputs) node->inputs.push_back(t.node_ptr());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

}  // namespace dfw::nn
