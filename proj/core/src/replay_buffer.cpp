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
#include "epiflow/replay_buffer.hpp"

#include "epiflow/errors.hpp"

namespace epiflow {

CompactObservation CompactObservation::From(const Observation& obs) {
  return {obs.hour, obs.visible, obs.delta, obs.loss};
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1u << 16));
}

void ReplayBuffer::add(Transition transition) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(transition));
  } else {
    items_[next_] = std::move(transition);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count,
                                                      std::mt19937_64& rng) const {
  if (items_.empty()) throw StateError("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> out(count);
  for (std::size_t& i : out) i = pick(rng);
  return out;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t count,
                                                    std::mt19937_64& rng) const {
  std::vector<const Transition*> out;
  out.reserve(count);
  for (const std::size_t i : sample_indices(count, rng)) out.push_back(&items_[i]);
  return out;
}

}  // namespace epiflow
