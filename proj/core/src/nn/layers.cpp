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
#include "epiflow/nn/layers.hpp"

#include <cmath>

#include "epiflow/errors.hpp"
#include "epiflow/sihr.hpp"

namespace epiflow::nn {

GraphLayerKind parse_graph_layer_kind(const std::string& name) {
  if (name == "flow") return GraphLayerKind::kFlow;
  if (name == "mean" || name == "gnn-mean") return GraphLayerKind::kMean;
  if (name == "softmax" || name == "gnn-softmax") return GraphLayerKind::kSoftmax;
  throw ConfigError("unknown graph layer '" + name + "'");
}

std::string to_string(GraphLayerKind kind) {
  switch (kind) {
    case GraphLayerKind::kFlow:
      return "flow";
    case GraphLayerKind::kMean:
      return "mean";
    case GraphLayerKind::kSoftmax:
      return "softmax";
  }
  return "flow";
}

Matrix glorot_uniform(Index rows, Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

GraphLayer::GraphLayer(GraphLayerKind kind, Index in_features, Index out_features,
                       Activation act, const std::string& name, std::mt19937_64& rng)
    : kind_(kind),
      act_(act),
      weight_(name + ".W", glorot_uniform(2 * in_features, out_features, rng)),
      bias_(name + ".B", Matrix::Zero(1, out_features)) {}

Tape::Id GraphLayer::forward(Tape& tape, Tape::Id features, const EdgeInputs& edges,
                             Index block) {
  Tape::Id joined = 0;
  switch (kind_) {
    case GraphLayerKind::kFlow:
      joined = tape.flow_aggregate(features, edges.weights, block);
      break;
    case GraphLayerKind::kMean:
      joined = tape.concat_cols(features, tape.mean_aggregate(features, edges.mask, block));
      break;
    case GraphLayerKind::kSoftmax:
      joined = tape.concat_cols(
          features, tape.softmax_aggregate(features, edges.weights, edges.mask, block));
      break;
  }
  const Tape::Id lin = tape.add_row(tape.matmul(joined, tape.param(weight_)), tape.param(bias_));
  return act_ == Activation::kIdentity ? lin : tape.activate(lin, act_);
}

DenseLayer::DenseLayer(Index in_features, Index out_features, Activation act,
                       const std::string& name, std::mt19937_64& rng)
    : act_(act),
      weight_(name + ".W", glorot_uniform(in_features, out_features, rng)),
      bias_(name + ".B", Matrix::Zero(1, out_features)) {}

Tape::Id DenseLayer::forward(Tape& tape, Tape::Id x) {
  const Tape::Id lin = tape.add_row(tape.matmul(x, tape.param(weight_)), tape.param(bias_));
  return act_ == Activation::kIdentity ? lin : tape.activate(lin, act_);
}

namespace {

Matrix support_mask(const Matrix& m) { return (m.array() != 0.0).cast<double>().matrix(); }

}  // namespace

Matrix flow_gnn_forward(const Matrix& features, const Matrix& flows, const Vector& movable,
                        GraphLayer& layer) {
  if (layer.kind() != GraphLayerKind::kFlow) throw ConfigError("flow_gnn_forward needs a flow layer");
  Tape tape;
  EdgeInputs edges;
  edges.weights = tape.constant(transport_fractions(flows, movable).fractions);
  const Tape::Id out = layer.forward(tape, tape.constant(features), edges, features.rows());
  return tape.value(out);
}

Matrix gnn_mean_forward(const Matrix& features, const Matrix& adjacency, GraphLayer& layer) {
  if (layer.kind() != GraphLayerKind::kMean) throw ConfigError("gnn_mean_forward needs a mean layer");
  Tape tape;
  EdgeInputs edges;
  edges.mask = tape.constant(support_mask(adjacency));
  const Tape::Id out = layer.forward(tape, tape.constant(features), edges, features.rows());
  return tape.value(out);
}

Matrix gnn_softmax_forward(const Matrix& features, const Matrix& flows, GraphLayer& layer) {
  if (layer.kind() != GraphLayerKind::kSoftmax) {
    throw ConfigError("gnn_softmax_forward needs a softmax layer");
  }
  Tape tape;
  EdgeInputs edges;
  edges.weights = tape.constant(flows);
  edges.mask = tape.constant(support_mask(flows));
  const Tape::Id out = layer.forward(tape, tape.constant(features), edges, features.rows());
  return tape.value(out);
}

void check_finite_gradients(const std::vector<Parameter*>& params) {
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) throw NumericError("non-finite gradient in " + p->name);
  }
}

}  // namespace epiflow::nn
