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
#include "epiflow/experts.hpp"
#include "epiflow/mobility.hpp"
#include "epiflow/sihr.hpp"
#include "epiflow/training.hpp"

namespace epiflow {

struct DataConfig {
  // Load the series from this OD CSV instead of generating a city.
  std::filesystem::path od_path;
  // Tiling of the base month for episodes.
  int repeats = 24;
};

struct EvaluationConfig {
  Index seed_region = 0;
  double seed_count = 10.0;
  std::vector<double> fixed_rates = {0.15};
  // Thresholds end training episodes only; evaluation runs to completion.
  bool enforce_thresholds = false;
  std::vector<int> agent_t_starts = {0, 10, 20};
  // Per-region hourly CSV from simulate.
  bool region_csv = false;
};

// Everything a command needs. Sections of the JSON file mirror the members;
// unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "runs";
  CityGenParams city;
  DiseaseParams disease;
  EnvConfig env;
  AgentConfig agent;
  ExpertParams experts;
  TrainingConfig training;
  EvaluationConfig evaluation;
  DataConfig data;

  void validate() const;
};

// Parses JSON text on top of the defaults.
RunConfig parse_run_config(const std::string& json_text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
// Full configuration as JSON text (stable key order).
std::string to_json(const RunConfig& config, int indent = 2);

}  // namespace epiflow
