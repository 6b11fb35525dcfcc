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
#include <string>
#include <vector>

#include "epiflow/agent.hpp"
#include "epiflow/control_env.hpp"
#include "epiflow/nn/checkpoint.hpp"

namespace epiflow {

struct TrainingConfig {
  // Environment control steps, one gradient update each once the buffer
  // holds a batch.
  std::int64_t total_steps = 400000;
  // Random episode initialization: one region seeded with U(1, max) infected.
  double max_seed_count = 10.0;
  // Save checkpoint_<step>.json every this many steps; 0 disables.
  std::int64_t checkpoint_every = 0;
  // Checkpoints go here when non-empty.
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
};

struct EpisodeSummary {
  int episode = 0;
  // Cumulative control steps at the end of the episode.
  std::int64_t steps = 0;
  double reward = 0.0;
  std::string termination_reason;
  double expert_fraction = 0.0;
};

struct TrainingResult {
  std::vector<EpisodeSummary> episodes;
  std::int64_t steps = 0;
  nn::Checkpoint final_checkpoint;
};

TrainingResult run_training(ControlEnv& env, DdpgAgent& agent, const TrainingConfig& config);

// "episode,steps,reward,termination_reason,expert_fraction".
void save_training_log(const std::vector<EpisodeSummary>& episodes,
                       const std::filesystem::path& path);

}  // namespace epiflow
