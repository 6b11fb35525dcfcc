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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "epiflow/nn/adam.hpp"
#include "epiflow/nn/tape.hpp"

namespace epiflow::nn {

struct NamedMatrix {
  std::string name;
  Matrix value;
};

inline bool operator==(const NamedMatrix& a, const NamedMatrix& b) {
  return a.name == b.name && a.value.rows() == b.value.rows() &&
         a.value.cols() == b.value.cols() && a.value == b.value;
}

// Versioned JSON checkpoint:
//   {"format": "epiflow-checkpoint", "version": 1, "step": n,
//    "networks":   {net: [{"name", "rows", "cols", "data": [row-major]}]},
//    "optimizers": {net: {"learning_rate", "beta1", "beta2", "epsilon",
//                         "step", "first_moment": [...], "second_moment": [...]}},
//    "scalars":    {name: value},
//    "config":     {...}}
// Doubles are written with round-trip precision, so load(save(c)) == c.
struct Checkpoint {
  static constexpr int kVersion = 1;

  std::int64_t step = 0;
  std::map<std::string, std::vector<NamedMatrix>> networks;
  std::map<std::string, AdamState> optimizers;
  std::map<std::string, double> scalars;
  // Serialized JSON object carried verbatim.
  std::string config_json = "{}";
};

std::vector<NamedMatrix> snapshot(const std::vector<Parameter*>& params);
// Copies values back by position; throws DimensionError on name/shape mismatch.
void restore(const std::vector<NamedMatrix>& saved, const std::vector<Parameter*>& params);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

bool operator==(const Checkpoint& a, const Checkpoint& b);

}  // namespace epiflow::nn
