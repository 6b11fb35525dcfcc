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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "epiflow/control_env.hpp"
#include "epiflow/experts.hpp"

namespace epiflow {

// Metrics over the intervened period. H and R use per-region averages.
struct MetricsReport {
  double mean_h = 0.0;
  double max_h = 0.0;
  double total_r = 0.0;
  double q = 0.0;
  int t20_city = 0;
  int t20_region = 0;
};

// Daily quota ratios below this count towards the 20% durations.
inline constexpr double kStringentRatio = 0.2;

MetricsReport compute_metrics(const EpisodeLog& log);

// Runs a full episode and returns its log.
EpisodeLog run_episode(ControlEnv& env, Policy& policy, const InitSpec& init);

struct SuiteRow {
  std::string policy;
  int t_start_days = 0;
  MetricsReport metrics;
  // "ok" or "failed: <message>".
  std::string status = "ok";
  double episode_reward = 0.0;
  std::string termination_reason;
};

// Baseline rows in report order: no-intervention, one ep-fixed row per x_q,
// ep-soft, ep-hard, ep-lockdown.
std::vector<std::string> default_baselines();

// Every row uses the same initialization. A policy that throws yields a
// failed row and the suite continues.
std::vector<SuiteRow> run_baseline_suite(std::shared_ptr<const MobilitySeries> series,
                                         const DiseaseParams& disease, const EnvConfig& env,
                                         const ExpertParams& experts,
                                         const std::vector<std::string>& policies,
                                         const std::vector<double>& fixed_rates,
                                         const InitSpec& init);

SuiteRow evaluate_policy(std::shared_ptr<const MobilitySeries> series,
                         const DiseaseParams& disease, const EnvConfig& env, Policy& policy,
                         const InitSpec& init);

// Column order of the CSV report and row keys of the JSON report.
const std::vector<std::string>& report_columns();
void save_report_csv(const std::vector<SuiteRow>& rows, const std::filesystem::path& path);
void save_report_json(const std::vector<SuiteRow>& rows, const std::filesystem::path& path);
// Throws ParseError when the file does not match the report schema.
void validate_report_json(const std::filesystem::path& path);

// Writes <prefix>h_curve.csv, <prefix>quota_grid.csv and
// <prefix>quota_histogram.csv into dir.
void export_figure_data(const EpisodeLog& log, const std::filesystem::path& dir,
                        const std::string& prefix = "");

}  // namespace epiflow
