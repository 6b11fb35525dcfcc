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

#include <random>
#include <string>
#include <vector>

#include "epiflow/nn/tape.hpp"
#include "epiflow/types.hpp"

namespace epiflow::nn {

enum class GraphLayerKind {
  // Transport-weighted staying and inflow features.
  kFlow,
  // Unweighted in-neighbor mean.
  kMean,
  // Softmax over raw inflow magnitudes.
  kSoftmax,
};

GraphLayerKind parse_graph_layer_kind(const std::string& name);
std::string to_string(GraphLayerKind kind);

// Edge inputs of one graph layer, in the tape's (B*K) x K edge layout.
struct EdgeInputs {
  // kFlow: transport fractions M[j,i] / N_j. kSoftmax: raw flows M[j,i].
  Tape::Id weights = 0;
  // kMean / kSoftmax: nonzero where edge j -> i exists.
  Tape::Id mask = 0;
};

// f' = act([a | b] W + B) with (a, b) = (f_in, f_stay) for kFlow and
// (f_self, aggregate) for kMean / kSoftmax. W is (2 F_in) x F_out.
class GraphLayer {
 public:
  GraphLayer() = default;
  GraphLayer(GraphLayerKind kind, Index in_features, Index out_features, Activation act,
             const std::string& name, std::mt19937_64& rng);

  Tape::Id forward(Tape& tape, Tape::Id features, const EdgeInputs& edges, Index block);

  GraphLayerKind kind() const { return kind_; }
  Activation activation() const { return act_; }
  Index in_features() const { return weight_.value.rows() / 2; }
  Index out_features() const { return weight_.value.cols(); }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }

 private:
  GraphLayerKind kind_ = GraphLayerKind::kFlow;
  Activation act_ = Activation::kRelu;
  Parameter weight_;
  Parameter bias_;
};

// y = act(x W + B).
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(Index in_features, Index out_features, Activation act, const std::string& name,
             std::mt19937_64& rng);

  Tape::Id forward(Tape& tape, Tape::Id x);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }

 private:
  Activation act_ = Activation::kIdentity;
  Parameter weight_;
  Parameter bias_;
};

// Glorot-uniform initialized rows x cols matrix.
Matrix glorot_uniform(Index rows, Index cols, std::mt19937_64& rng);

// Single-graph conveniences (K x F features, K x K edges with [j, i] = j -> i).
Matrix flow_gnn_forward(const Matrix& features, const Matrix& flows, const Vector& movable,
                        GraphLayer& layer);
Matrix gnn_mean_forward(const Matrix& features, const Matrix& adjacency, GraphLayer& layer);
Matrix gnn_softmax_forward(const Matrix& features, const Matrix& flows, GraphLayer& layer);

// Throws NumericError naming the first parameter whose gradient is not finite.
void check_finite_gradients(const std::vector<Parameter*>& params);

}  // namespace epiflow::nn
