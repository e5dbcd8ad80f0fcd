// Copyright 2026 The mtlkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "mtlkit/tensor.hpp"

namespace mtl {

class Graph;

/// Handle to a node on a Graph. Cheap to copy; only valid while the graph
/// that produced it is alive.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  bool valid() const noexcept { return graph_ != nullptr; }
  Graph& graph() const noexcept { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Built fresh for every forward pass and discarded
/// after backward().
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter. Repeated calls with the same parameter
  /// return the same node. Frozen parameters are leaves without gradient.
  Var param(Parameter& p);

  /// Records an op result. `back` runs during backward() only when the
  /// node received gradient and at least one input requires it.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward back);
  Var record(Tensor value, std::span<const Var> inputs, Backward back);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, zero-initialized on first access.
  std::span<double> grad(std::size_t id);
  std::span<const double> grad_if_any(std::size_t id) const;

  /// Backpropagates from a single-element node and accumulates into the
  /// gradients of every trainable parameter reached.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* ref = nullptr;
    Parameter* param = nullptr;
    bool requires_grad = false;
    std::vector<double> grad;
    Backward back;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// Differentiable ops. Shapes follow the row-major convention: a rank-1
// tensor of length n is treated as a 1 x n matrix.

Var matmul(Var a, Var b);
/// x[m,k] * w[k,n] + b[n] broadcast over rows.
Var linear(Var x, Var w, Var b);
Var add(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var x);
/// tanh approximation of GELU.
Var gelu(Var x);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-12);
Var softmax_rows(Var x);
/// Mean over rows, restricted to rows with mask[r] != 0 when a mask is given.
Var mean_rows(Var x, std::span<const std::uint8_t> row_mask = {});
Var gather_rows(Var table, std::span<const std::size_t> ids);
Var concat_rows(std::span<const Var> parts);
Var sum(Var x);
/// Mean cross-entropy of softmax(logits) against integer labels.
Var softmax_xent(Var logits, std::span<const int> labels);

/// Scaled dot-product attention over pre-projected q/k/v, split into
/// `heads` column blocks. Keys with key_mask[j] == 0 receive zero weight.
Var attention_core(Var q, Var k, Var v, std::size_t heads, std::span<const std::uint8_t> key_mask = {});

struct AttentionWeights {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};

/// Multi-head self-attention: project to q/k/v, attend, project out.
Var self_attention(Var x, const AttentionWeights& w, std::size_t heads,
                   std::span<const std::uint8_t> key_mask = {});

/// Row-wise softmax of a plain tensor, used outside the tape.
Tensor softmax(const Tensor& logits);

}  // namespace mtl
