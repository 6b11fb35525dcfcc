// Copyright 2026 The Epiflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include "epiflow/types.hpp"

namespace epiflow::nn {

// A trainable matrix and its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };

Activation parse_activation(const std::string& name);
std::string to_string(Activation act);
Matrix apply_activation(const Matrix& x, Activation act);

// Records a forward computation over a fixed set of ops and replays it in
// reverse to produce exact gradients.
//
// Graph ops work on B stacked graphs of K nodes: node features are (B*K) x F,
// edge quantities (B*K) x K where row b*K + j, column i holds the value on
// edge j -> i of graph b.
class Tape {
 public:
  using Id = std::size_t;

  Id constant(Matrix value);
  // Constant read in place; value must outlive the tape.
  Id constant_ref(const Matrix& value);
  // Differentiable leaf; its gradient is readable after backward().
  Id input(Matrix value);
  // Leaf bound to a parameter; backward() adds into p.grad unless the
  // parameter was frozen on this tape.
  Id param(Parameter& p);
  // Later param() calls for these read the value but take no gradient.
  void freeze(const std::vector<Parameter*>& params);

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  // x (n x f) plus a broadcast 1 x f row.
  Id add_row(Id x, Id row);
  // x plus a broadcast 1 x 1 scalar node.
  Id add_scalar(Id x, Id scalar);
  Id hadamard(Id a, Id b);
  Id activate(Id x, Activation act);
  Id concat_cols(Id a, Id b);
  Id scale(Id x, double s);

  // Flow transport with fractions T (T[j,i] = M[j,i] / N_j):
  //   in_i   = sum_j T[j,i] f_j
  //   stay_i = (1 - sum_j T[i,j]) f_i
  // Returns [in | stay].
  Id flow_aggregate(Id features, Id transport, Index block);
  // Unweighted mean over in-neighbors j (mask[j,i] != 0); zero when a node
  // has none.
  Id mean_aggregate(Id features, Id mask, Index block);
  // sum_j w[j,i] f_j, w[., i] = softmax over in-neighbors of weights[., i].
  Id softmax_aggregate(Id features, Id weights, Id mask, Index block);
  // out[b*K + i, j] = src[b*K + i] + dst[b*K + j] for column vectors src, dst.
  Id pairwise_sum(Id src, Id dst, Index block);
  // sum_c w[c] X_c for a 1 x C weight row and same-shape matrices X_c.
  Id weighted_sum(const std::vector<Id>& terms, Id weights);
  // B x F row means of each K-row block.
  Id block_mean(Id x, Index block);
  // Mean of all entries, 1 x 1.
  Id mean(Id x);
  // mean((pred - target)^2), 1 x 1.
  Id mean_squared_error(Id pred, Id target);

  const Matrix& value(Id id) const {
    const Node& n = nodes_[id];
    return n.external != nullptr ? *n.external : n.value;
  }
  // Gradient of the last backward() root; an empty matrix means zero.
  const Matrix& grad(Id id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  void backward(Id root);
  void backward(Id root, const Matrix& seed);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, Id)> back;
    Parameter* param = nullptr;
    const Matrix* external = nullptr;
    bool needs_grad = false;
  };

  Id push(Matrix value, bool needs_grad, std::function<void(Tape&, Id)> back);
  void accumulate(Id id, Matrix g);
  bool needs(Id id) const { return nodes_[id].needs_grad; }

  std::vector<Node> nodes_;
  std::unordered_set<const Parameter*> frozen_;
};

}  // namespace epiflow::nn
