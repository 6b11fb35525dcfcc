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
#include "epiflow/control_env.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <utility>

#include "epiflow/errors.hpp"

namespace epiflow {

void EnvConfig::validate() const {
  if (control_period < 1 || 24 % control_period != 0) {
    throw ConfigError("control_period must divide 24");
  }
  if (t_start_days < 0) throw ConfigError("t_start must be >= 0");
  if (horizon_days < 1) throw ConfigError("horizon must be >= 1 day");
  if (t_start_hours() >= horizon_hours()) {
    throw ConfigError("t_start (" + std::to_string(t_start_days) +
                      " days) must be earlier than the horizon (" +
                      std::to_string(horizon_days) + " days)");
  }
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("lambda must lie in (0, 1)");
  if (!(h0 > 0.0) || !(l0 > 0.0) || !(k_h > 0.0)) {
    throw ConfigError("k_h, H_0 and L_0 must be positive");
  }
  if (!(terminal_penalty >= 0.0)) throw ConfigError("terminal_penalty must be >= 0");
}

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kNone:
      return "none";
    case TerminationReason::kHorizon:
      return "horizon";
    case TerminationReason::kExtinct:
      return "extinct";
    case TerminationReason::kInfectionThreshold:
      return "infection-threshold";
    case TerminationReason::kLockdownThreshold:
      return "lockdown-threshold";
  }
  return "unknown";
}

std::vector<Matrix> Observation::demand_window() const {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(control_period));
  for (int k = 0; k < control_period; ++k) out.push_back(demand(k));
  return out;
}

double reward_infection(const Vector& hospitalized, double k_h, double h0) {
  const double mean_h = hospitalized.size() > 0 ? hospitalized.mean() : 0.0;
  return k_h * std::exp(mean_h / h0);
}

Vector restriction_ratios(const Vector& demanded_out, const Vector& allowed_out,
                          const std::vector<MeanOutflow>& mean_outflows) {
  const Index k = demanded_out.size();
  if (allowed_out.size() != k || static_cast<Index>(mean_outflows.size()) != k) {
    throw DimensionError("restriction_ratios: length mismatch");
  }
  Vector out(k);
  for (Index i = 0; i < k; ++i) {
    const MeanOutflow& m = mean_outflows[static_cast<std::size_t>(i)];
    out[i] = m.zero_demand ? 0.0 : (demanded_out[i] - allowed_out[i]) / m.value;
  }
  return out;
}

Vector update_loss(const Vector& loss, const Matrix& demand, const Matrix& allowed,
                   const std::vector<MeanOutflow>& mean_outflows, double lambda) {
  const Vector ratio = restriction_ratios(demand.rowwise().sum(), allowed.rowwise().sum(),
                                          mean_outflows);
  return lambda * (loss + ratio);
}

double reward_mobility(const Vector& loss, const Vector& restriction, double l0) {
  const Index k = loss.size();
  if (restriction.size() != k) throw DimensionError("reward_mobility: length mismatch");
  double sum = 0.0;
  for (Index i = 0; i < k; ++i) sum += std::exp(loss[i] / l0) * restriction[i];
  return sum / static_cast<double>(k);
}

double reward_mobility(const Vector& loss, const Matrix& demand, const Matrix& allowed,
                       const std::vector<MeanOutflow>& mean_outflows, double l0) {
  return reward_mobility(
      loss, restriction_ratios(demand.rowwise().sum(), allowed.rowwise().sum(), mean_outflows),
      l0);
}

std::optional<TerminationReason> check_termination(const EpidemicState& state,
                                                   const Vector& loss,
                                                   const EnvConfig& config) {
  if (state.I.size() > 0 && state.I.mean() > config.infection_threshold) {
    return TerminationReason::kInfectionThreshold;
  }
  if (loss.size() > 0 && loss.maxCoeff() > config.lockdown_threshold) {
    return TerminationReason::kLockdownThreshold;
  }
  return std::nullopt;
}

void EpisodeLog::save_region_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out.precision(17);
  out << "hour,region,S,I,H,R,demand_out,allowed_out,L\n";
  for (const RegionHourRecord& r : region_hours) {
    for (Index i = 0; i < r.state.num_regions(); ++i) {
      out << r.hour << ',' << i << ',' << r.state.S[i] << ',' << r.state.I[i] << ','
          << r.state.H[i] << ',' << r.state.R[i] << ',' << r.demand_out[i] << ','
          << r.allowed_out[i] << ',' << r.loss[i] << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

void EpisodeLog::save_reward_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out.precision(17);
  out << "step,hour,reward,infection_cost,mobility_cost,penalty\n";
  for (const StepRecord& s : steps) {
    out << s.step << ',' << s.hour << ',' << s.reward << ',' << s.infection_cost << ','
        << s.mobility_cost << ',' << s.penalty << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

ControlEnv::ControlEnv(std::shared_ptr<const MobilitySeries> series, DiseaseParams disease,
                       EnvConfig config)
    : series_(std::move(series)), disease_(disease), config_(config) {
  if (!series_) throw ConfigError("environment needs a mobility series");
  disease_.validate();
  config_.validate();
  mean_outflows_ = epiflow::mean_outflows(*series_);
}

Observation ControlEnv::observation() const {
  Observation obs;
  obs.hour = hour_;
  obs.visible = visible(state_);
  obs.delta = visible_delta(obs.visible, previous_visible_);
  obs.loss = loss_;
  obs.control_period = config_.control_period;
  obs.series = series_;
  return obs;
}

std::pair<double, double> ControlEnv::advance_hour(const QuotaMatrix* quota, bool intervened,
                                                   Vector* demanded, Vector* allowed) {
  const Matrix demand = series_->demand(hour_);
  const Matrix flow = quota != nullptr ? apply_quota(demand, *quota) : demand;
  const Vector demand_out = demand.rowwise().sum();
  const Vector allowed_out = flow.rowwise().sum();
  const Vector ratio = restriction_ratios(demand_out, allowed_out, mean_outflows_);
  const double r_h = reward_infection(state_.H, config_.k_h, config_.h0);
  const double r_m = reward_mobility(loss_, ratio, config_.l0);

  HourRecord rec;
  rec.hour = hour_;
  rec.intervened = intervened;
  rec.S = state_.S.sum();
  rec.I = state_.I.sum();
  rec.H = state_.H.sum();
  rec.R = state_.R.sum();
  rec.demand = demand_out.sum();
  rec.allowed = allowed_out.sum();
  rec.infection_cost = r_h;
  rec.mobility_cost = r_m;
  log_.hours.push_back(rec);
  if (config_.record_region_detail) {
    log_.region_hours.push_back({hour_, state_, demand_out, allowed_out, loss_});
  }
  const std::size_t day = static_cast<std::size_t>(hour_ / 24);
  if (log_.day_demand.size() <= day) {
    log_.day_demand.resize(day + 1, Vector::Zero(state_.num_regions()));
    log_.day_allowed.resize(day + 1, Vector::Zero(state_.num_regions()));
  }
  log_.day_demand[day] += demand_out;
  log_.day_allowed[day] += allowed_out;

  previous_visible_ = visible(state_);
  state_ = step_hour(state_, flow, disease_);
  loss_ = config_.lambda * (loss_ + ratio);
  ++hour_;
  if (demanded != nullptr) *demanded += demand_out;
  if (allowed != nullptr) *allowed += allowed_out;
  return {r_h, r_m};
}

Observation ControlEnv::reset(const InitSpec& init) {
  const Index k = series_->num_regions();
  state_ = EpidemicState::Susceptible(series_->initial_population());
  if (init.random) {
    std::mt19937_64 rng(init.random_seed);
    std::uniform_int_distribution<Index> region(0, k - 1);
    std::uniform_real_distribution<double> count(1.0, std::max(1.0, init.max_random_count));
    const Index r = region(rng);
    state_ = seed_infection(state_, r, std::min(count(rng), state_.S[r]));
  } else {
    state_ = seed_infection(state_, init.seed_region, init.seed_count);
  }
  loss_ = Vector::Zero(k);
  hour_ = 0;
  step_index_ = 0;
  done_ = false;
  started_ = true;
  log_ = EpisodeLog{};
  log_.num_regions = k;
  log_.control_period = config_.control_period;
  log_.t_start_hour = config_.t_start_hours();
  previous_visible_ = visible(state_);

  while (hour_ < config_.t_start_hours()) {
    advance_hour(nullptr, false, nullptr, nullptr);
  }
  log_.final_state = state_;
  return observation();
}

StepOutcome ControlEnv::step(const QuotaMatrix& quota) {
  if (!started_) throw ProtocolError("step() before reset()");
  if (done_) throw ProtocolError("step() after the episode finished");
  if (quota.num_regions() != series_->num_regions()) {
    throw DimensionError("quota matrix does not match region count");
  }
  const Index k = series_->num_regions();
  StepInfo info;
  info.demanded_out = Vector::Zero(k);
  info.allowed_out = Vector::Zero(k);
  const int step_hour0 = hour_;

  for (int h = 0; h < config_.control_period; ++h) {
    const auto [r_h, r_m] = advance_hour(&quota, true, &info.demanded_out, &info.allowed_out);
    info.infection_cost += r_h;
    info.mobility_cost += r_m;
    ++info.hours;
    if (config_.enforce_thresholds) {
      if (const auto trip = check_termination(state_, loss_, config_)) {
        info.reason = *trip;
        info.penalty = config_.terminal_penalty;
        break;
      }
    }
    if (state_.I.sum() < config_.extinction_level && state_.H.sum() < config_.extinction_level) {
      info.reason = TerminationReason::kExtinct;
      break;
    }
    if (hour_ >= config_.horizon_hours()) {
      info.reason = TerminationReason::kHorizon;
      break;
    }
  }

  StepOutcome out;
  out.reward = -(info.infection_cost + info.mobility_cost) - info.penalty;
  out.done = info.reason != TerminationReason::kNone;
  done_ = out.done;

  StepRecord rec;
  rec.step = step_index_++;
  rec.hour = step_hour0;
  rec.reward = out.reward;
  rec.infection_cost = info.infection_cost;
  rec.mobility_cost = info.mobility_cost;
  rec.penalty = info.penalty;
  rec.quota_rate = Vector(k);
  for (Index i = 0; i < k; ++i) {
    rec.quota_rate[i] = info.demanded_out[i] > 0.0
                            ? info.allowed_out[i] / info.demanded_out[i]
                            : std::numeric_limits<double>::quiet_NaN();
  }
  log_.steps.push_back(std::move(rec));
  log_.total_reward += out.reward;
  log_.final_state = state_;
  if (out.done) log_.reason = info.reason;

  out.info = std::move(info);
  out.observation = observation();
  return out;
}

}  // namespace epiflow
