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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epiflow/mobility.hpp"
#include "epiflow/sihr.hpp"
#include "epiflow/types.hpp"

namespace epiflow {

struct EnvConfig {
  // Hours each quota decision stays in force.
  int control_period = 4;
  // Days of unrestricted spread before the controller acts.
  int t_start_days = 20;
  // Episode length in days, warm-up included.
  int horizon_days = 744;

  double k_h = 1.0;
  double h0 = 3.0;
  double l0 = 72.0;
  double lambda = 0.99;

  double infection_threshold = 100.0;
  double lockdown_threshold = 336.0;
  bool enforce_thresholds = true;
  double terminal_penalty = 1000.0;
  // City-wide I and H both below this level ends the episode.
  double extinction_level = 1e-6;

  // Keep per-region hourly rows in the episode log.
  bool record_region_detail = true;

  int horizon_hours() const { return horizon_days * 24; }
  int t_start_hours() const { return t_start_days * 24; }
  void validate() const;
};

enum class TerminationReason {
  kNone,
  kHorizon,
  kExtinct,
  kInfectionThreshold,
  kLockdownThreshold,
};

std::string to_string(TerminationReason reason);

// Initial outbreak. Fixed: seed_count infections in seed_region. Random:
// region uniform over K, count uniform in [1, max_random_count], drawn from
// random_seed.
struct InitSpec {
  bool random = false;
  Index seed_region = 0;
  double seed_count = 1.0;
  std::uint64_t random_seed = 0;
  double max_random_count = 10.0;

  static InitSpec Fixed(Index region, double count) {
    InitSpec s;
    s.seed_region = region;
    s.seed_count = count;
    return s;
  }
  static InitSpec Random(std::uint64_t seed, double max_count) {
    InitSpec s;
    s.random = true;
    s.random_seed = seed;
    s.max_random_count = max_count;
    return s;
  }
};

// The controller's view at hour tau.
struct Observation {
  int hour = 0;
  VisibleState visible;
  VisibleDelta delta;
  Vector loss;
  int control_period = 4;
  std::shared_ptr<const MobilitySeries> series;

  Index num_regions() const { return loss.size(); }
  // Demand for hour tau + offset, offset in [0, control_period).
  Matrix demand(int offset) const { return series->demand(hour + offset); }
  std::vector<Matrix> demand_window() const;
};

struct StepInfo {
  Vector demanded_out;
  Vector allowed_out;
  double infection_cost = 0.0;
  double mobility_cost = 0.0;
  double penalty = 0.0;
  int hours = 0;
  TerminationReason reason = TerminationReason::kNone;
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct HourRecord {
  int hour = 0;
  bool intervened = false;
  // City totals at the start of the hour.
  double S = 0.0;
  double I = 0.0;
  double H = 0.0;
  double R = 0.0;
  double demand = 0.0;
  double allowed = 0.0;
  double infection_cost = 0.0;
  double mobility_cost = 0.0;
};

struct RegionHourRecord {
  int hour = 0;
  EpidemicState state;
  Vector demand_out;
  Vector allowed_out;
  Vector loss;
};

struct StepRecord {
  int step = 0;
  int hour = 0;
  double reward = 0.0;
  double infection_cost = 0.0;
  double mobility_cost = 0.0;
  double penalty = 0.0;
  // Region quota rate allowed/demanded over the period; NaN for regions
  // without demand.
  Vector quota_rate;
};

struct EpisodeLog {
  Index num_regions = 0;
  int control_period = 4;
  int t_start_hour = 0;
  std::vector<HourRecord> hours;
  std::vector<StepRecord> steps;
  std::vector<RegionHourRecord> region_hours;
  // Per calendar day (hour / 24) regional demand and allowed outflow.
  std::vector<Vector> day_demand;
  std::vector<Vector> day_allowed;
  EpidemicState final_state;
  TerminationReason reason = TerminationReason::kNone;
  double total_reward = 0.0;

  // "hour,region,S,I,H,R,demand_out,allowed_out,L"; requires region detail.
  void save_region_csv(const std::filesystem::path& path) const;
  // "step,hour,reward,infection_cost,mobility_cost,penalty".
  void save_reward_csv(const std::filesystem::path& path) const;
};

// R_h = k_h exp(mean_i(H_i) / H_0).
double reward_infection(const Vector& hospitalized, double k_h, double h0);

// (M_d,i - M_p,i) / mean outflow_i; zero for regions without demand.
Vector restriction_ratios(const Vector& demanded_out, const Vector& allowed_out,
                          const std::vector<MeanOutflow>& mean_outflows);

// L_i <- lambda (L_i + (M_d,i - M_p,i) / mean outflow_i).
Vector update_loss(const Vector& loss, const Matrix& demand, const Matrix& allowed,
                   const std::vector<MeanOutflow>& mean_outflows, double lambda);

// (1/K) sum_i exp(L_i / L_0) (M_d,i - M_p,i) / mean outflow_i.
double reward_mobility(const Vector& loss, const Matrix& demand, const Matrix& allowed,
                       const std::vector<MeanOutflow>& mean_outflows, double l0);
double reward_mobility(const Vector& loss, const Vector& restriction, double l0);

// Strict comparisons: mean_i(I_i) > I_t or max_i(L_i) > L_t.
std::optional<TerminationReason> check_termination(const EpidemicState& state,
                                                   const Vector& loss,
                                                   const EnvConfig& config);

class ControlEnv {
 public:
  ControlEnv(std::shared_ptr<const MobilitySeries> series, DiseaseParams disease,
             EnvConfig config);

  // Seeds the outbreak, runs t_start days without restriction and returns
  // the first observation.
  Observation reset(const InitSpec& init);
  // Applies quota for control_period hours. Throws ProtocolError after done.
  StepOutcome step(const QuotaMatrix& quota);

  bool done() const { return done_; }
  int hour() const { return hour_; }
  const EpidemicState& state() const { return state_; }
  const Vector& loss() const { return loss_; }
  const EpisodeLog& log() const { return log_; }
  const EnvConfig& config() const { return config_; }
  const DiseaseParams& disease() const { return disease_; }
  const std::shared_ptr<const MobilitySeries>& series() const { return series_; }
  const std::vector<MeanOutflow>& mean_outflows() const { return mean_outflows_; }
  Observation observation() const;

 private:
  // Advances one hour under the given quota; returns (R_h, R_m).
  std::pair<double, double> advance_hour(const QuotaMatrix* quota, bool intervened,
                                         Vector* demanded, Vector* allowed);

  std::shared_ptr<const MobilitySeries> series_;
  DiseaseParams disease_;
  EnvConfig config_;
  std::vector<MeanOutflow> mean_outflows_;

  EpidemicState state_;
  VisibleState previous_visible_;
  Vector loss_;
  int hour_ = 0;
  int step_index_ = 0;
  bool done_ = true;
  bool started_ = false;
  EpisodeLog log_;
};

}  // namespace epiflow
