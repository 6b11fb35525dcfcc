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
#include "epiflow/nn/adam.hpp"

#include <cmath>

#include "epiflow/errors.hpp"

namespace epiflow::nn {

AdamState AdamState::For(std::span<Parameter* const> params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const Parameter* p : params) {
    s.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    s.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  return s;
}

void adam_update(AdamState& state, std::span<Parameter* const> params) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("adam_update: parameter count does not match optimizer state");
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      throw DimensionError("adam_update: moment shape mismatch for " + p.name);
    }
    m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
    v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= c.learning_rate * (m.array() / correction1) /
                       ((v.array() / correction2).sqrt() + c.epsilon);
  }
}

}  // namespace epiflow::nn
