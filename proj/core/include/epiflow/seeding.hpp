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
#include <string_view>

namespace epiflow {

// One splitmix64 step: advances state and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

// Seed for a named stream: splitmix64(global ^ fnv1a64(tag)).
// Streams in use: "city", "env", "agent", "train".
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stream);

}  // namespace epiflow
