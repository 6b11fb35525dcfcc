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
#include <random>
#include <vector>

#include "epiflow/control_env.hpp"
#include "epiflow/sihr.hpp"
#include "epiflow/types.hpp"

namespace epiflow {

// Observation without the shared series handle; edge inputs are rebuilt
// from the hour when a batch is assembled.
struct CompactObservation {
  int hour = 0;
  VisibleState visible;
  VisibleDelta delta;
  Vector loss;

  static CompactObservation From(const Observation& obs);
};

struct Transition {
  CompactObservation observation;
  Matrix action;
  double reward = 0.0;
  CompactObservation next_observation;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(Transition transition);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t index) const { return items_.at(index); }

  // Uniform with replacement over occupied slots.
  std::vector<std::size_t> sample_indices(std::size_t count, std::mt19937_64& rng) const;
  std::vector<const Transition*> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

}  // namespace epiflow
