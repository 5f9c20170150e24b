// Copyright (c) 2026 The BMFA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BMFA_TAPE_H_
#define BMFA_TAPE_H_

#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bmfa/kernels.h"
#include "bmfa/tensor.h"

namespace bmfa {

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode recorder. Each recorded node keeps its forward value and a
// closure that pushes the node's gradient to its parents using the analytic
// *Backward kernels. Parameters are leaves bound by address, so gradients
// can be looked up by the model tensor they belong to.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Input(Tensor<T> value, bool requires_grad = false) {
    Node node;
    node.owned = std::move(value);
    node.requires_grad = requires_grad;
    return Push(std::move(node));
  }

  // Leaf bound to a model tensor; repeated calls return the same Var.
  Var Param(const Tensor<T>* p) {
    auto it = param_ids_.find(p);
    if (it != param_ids_.end()) return Var{it->second};
    Node node;
    node.external = p;
    node.requires_grad = true;
    Var v = Push(std::move(node));
    param_ids_.emplace(p, v.id);
    return v;
  }

  Var Record(Tensor<T> value, std::initializer_list<Var> parents,
             BackwardFn backward) {
    Node node;
    node.owned = std::move(value);
    for (Var p : parents) {
      if (nodes_[p.id].requires_grad) node.requires_grad = true;
    }
    if (node.requires_grad) node.backward = std::move(backward);
    return Push(std::move(node));
  }

  const Tensor<T>& value(Var v) const { return nodes_[v.id].value(); }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  void Accumulate(Var v, const Tensor<T>& g) {
    Node& node = nodes_[v.id];
    if (!node.requires_grad) return;
    if (node.grad.empty()) {
      node.grad = g;
      return;
    }
    BMFA_REQUIRE(node.grad.shape() == g.shape(),
                 "tape: gradient shape mismatch");
    for (size_t i = 0; i < g.size(); ++i) node.grad[i] += g[i];
  }

  void Accumulate(Var v, Tensor<T>&& g) {
    Node& node = nodes_[v.id];
    if (!node.requires_grad) return;
    if (node.grad.empty()) {
      node.grad = std::move(g);
      return;
    }
    Accumulate(v, static_cast<const Tensor<T>&>(g));
  }

  // Seeds d(loss)/d(loss) = 1 for a single-element loss and runs all
  // recorded closures in reverse order.
  void Backward(Var loss) {
    BMFA_REQUIRE(value(loss).size() == 1, "tape: loss must be a scalar");
    Accumulate(loss, Tensor<T>(value(loss).shape(), T(1)));
    for (int i = loss.id; i >= 0; --i) {
      Node& node = nodes_[i];
      if (!node.backward || node.grad.empty()) continue;
      node.backward(*this, node.grad);
      if (node.external == nullptr) node.grad = Tensor<T>();
    }
  }

  // nullptr when no gradient reached the value.
  const Tensor<T>* GradOf(Var v) const {
    const Tensor<T>& g = nodes_[v.id].grad;
    return g.empty() ? nullptr : &g;
  }

  const Tensor<T>* GradFor(const Tensor<T>* param) const {
    auto it = param_ids_.find(param);
    if (it == param_ids_.end()) return nullptr;
    return GradOf(Var{it->second});
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;

    const Tensor<T>& value() const { return external ? *external : owned; }
  };

  Var Push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor<T>*, int> param_ids_;
};

}  // namespace bmfa

#endif  // BMFA_TAPE_H_
