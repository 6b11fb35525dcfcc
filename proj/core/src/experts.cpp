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
#include "epiflow/experts.hpp"

#include <cstdio>

#include "epiflow/errors.hpp"

namespace epiflow {

void ExpertParams::validate() const {
  if (!(x_q >= 0.0 && x_q <= 1.0)) throw ConfigError("x_q must lie in [0, 1]");
  if (!(x_h >= 0.0) || !(pseudo_x_h >= 0.0)) throw ConfigError("x_h must be >= 0");
  if (!(x_l > 0.0) || !(pseudo_x_l > 0.0)) throw ConfigError("x_l must be > 0");
  if (x_t < 1) throw ConfigError("x_t must be >= 1");
}

QuotaMatrix ep_fixed(Index num_regions, double x_q) {
  return QuotaMatrix::Filled(num_regions, x_q);
}

QuotaMatrix ep_soft(const Vector& hospitalized, const Vector& loss, double x_h, double x_l) {
  if (hospitalized.size() != loss.size()) throw DimensionError("ep_soft: length mismatch");
  Vector rows(hospitalized.size());
  for (Index i = 0; i < rows.size(); ++i) {
    rows[i] = (hospitalized[i] > x_h && loss[i] < x_l) ? 0.0 : 1.0;
  }
  return QuotaMatrix::FromRowRates(rows);
}

QuotaMatrix ep_hard(const Vector& hospitalized,
                    const std::vector<std::optional<double>>& recent_allowed_outflow,
                    double x_h) {
  if (static_cast<Index>(recent_allowed_outflow.size()) != hospitalized.size()) {
    throw DimensionError("ep_hard: length mismatch");
  }
  Vector rows(hospitalized.size());
  for (Index i = 0; i < rows.size(); ++i) {
    const auto& recent = recent_allowed_outflow[static_cast<std::size_t>(i)];
    const bool moved_recently = !recent.has_value() || *recent > 0.0;
    rows[i] = (hospitalized[i] > x_h && moved_recently) ? 0.0 : 1.0;
  }
  return QuotaMatrix::FromRowRates(rows);
}

QuotaMatrix ep_lockdown(const Vector& hospitalized, const Vector& loss) {
  return ep_soft(hospitalized, loss, 0.0, std::numeric_limits<double>::infinity());
}

QuotaMatrix pseudo_expert(const Vector& hospitalized, const Vector& loss, double x_h,
                          double x_l) {
  return ep_soft(hospitalized, loss, x_h, x_l);
}

QuotaMatrix NoInterventionPolicy::act(const Observation& obs) {
  return QuotaMatrix::Filled(obs.num_regions(), 1.0);
}

std::string FixedPolicy::name() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ep-fixed-%.2f", x_q_);
  return buf;
}

QuotaMatrix FixedPolicy::act(const Observation& obs) {
  return ep_fixed(obs.num_regions(), x_q_);
}

QuotaMatrix SoftPolicy::act(const Observation& obs) {
  return ep_soft(obs.visible.H, obs.loss, x_h_, x_l_);
}

QuotaMatrix LockdownPolicy::act(const Observation& obs) {
  return ep_lockdown(obs.visible.H, obs.loss);
}

void HardPolicy::reset() {
  current_.reset();
  decided_at_ = 0;
  history_.clear();
}

QuotaMatrix HardPolicy::act(const Observation& obs) {
  const Index k = obs.num_regions();
  const std::size_t window = static_cast<std::size_t>(x_t_) * 24;
  if (!current_ || obs.hour - decided_at_ >= 24) {
    std::vector<std::optional<double>> recent(static_cast<std::size_t>(k));
    if (history_.size() >= window) {
      Vector sum = Vector::Zero(k);
      for (std::size_t t = history_.size() - window; t < history_.size(); ++t) sum += history_[t];
      for (Index i = 0; i < k; ++i) recent[static_cast<std::size_t>(i)] = sum[i];
    }
    current_ = ep_hard(obs.visible.H, recent, x_h_);
    decided_at_ = obs.hour;
  }
  for (int h = 0; h < obs.control_period; ++h) {
    history_.push_back(apply_quota(obs.demand(h), *current_).rowwise().sum());
    if (history_.size() > window) history_.pop_front();
  }
  return *current_;
}

std::unique_ptr<Policy> make_expert_policy(const std::string& name, const ExpertParams& params) {
  if (name == "no-intervention") return std::make_unique<NoInterventionPolicy>();
  if (name == "ep-fixed") return std::make_unique<FixedPolicy>(params.x_q);
  if (name == "ep-soft") return std::make_unique<SoftPolicy>(params.x_h, params.x_l);
  if (name == "ep-hard") return std::make_unique<HardPolicy>(params.x_h, params.x_t);
  if (name == "ep-lockdown") return std::make_unique<LockdownPolicy>();
  if (name == "pseudo-expert") {
    return std::make_unique<SoftPolicy>(params.pseudo_x_h, params.pseudo_x_l, "pseudo-expert");
  }
  throw ConfigError("unknown policy '" + name + "'");
}

}  // namespace epiflow
