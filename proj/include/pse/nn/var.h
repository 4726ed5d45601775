// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Minimal tape-free reverse-mode autodiff. Every op allocates a Node that
// keeps its inputs alive; Backward() walks the graph in reverse topological
// order. Graphs are freed when the last Var referring to the root dies.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pse/nn/tensor.h"

namespace pse::nn {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  // Gradient buffer, zero-initialized on first use.
  Tensor& Grad();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int64_t dim(int axis) const { return node_->value.dim(axis); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }

  // Empty tensor when no gradient reached this variable.
  const Tensor& grad() const { return node_->grad; }
  void ZeroGrad() { node_->grad = Tensor(); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  friend Var MakeOp(Tensor, std::vector<Var>, std::function<void(Node&)>);
  std::shared_ptr<Node> node_;
};

// Builds a result node. `backward` is recorded only when grad mode is on
// and at least one input requires a gradient.
Var MakeOp(Tensor value, std::vector<Var> inputs,
           std::function<void(Node&)> backward);

// Seeds d(root)/d(root) = 1 for a single-element root and propagates.
void Backward(const Var& root);

bool GradEnabled();

// Disables graph recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace pse::nn
