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

#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "epiflow/control_env.hpp"
#include "epiflow/mobility.hpp"

namespace epiflow {

struct ExpertParams {
  // EP-Fixed quota rate.
  double x_q = 0.15;
  // EP-Soft / EP-Hard hospitalized threshold.
  double x_h = 0.0;
  // EP-Soft loss cap.
  double x_l = 168.0;
  // EP-Hard reopen window in days.
  int x_t = 7;
  // Pseudo expert used during training.
  double pseudo_x_h = 1.0;
  double pseudo_x_l = 168.0;

  void validate() const;
};

QuotaMatrix ep_fixed(Index num_regions, double x_q);

// Row i is closed when H_i > x_h and L_i < x_l.
QuotaMatrix ep_soft(const Vector& hospitalized, const Vector& loss, double x_h, double x_l);

// Row i is closed when H_i > x_h and region i had outgoing allowed mobility
// in the last x_t days. A missing history entry counts as outgoing mobility.
QuotaMatrix ep_hard(const Vector& hospitalized,
                    const std::vector<std::optional<double>>& recent_allowed_outflow,
                    double x_h);

// ep_soft with x_h = 0 and x_l = +inf.
QuotaMatrix ep_lockdown(const Vector& hospitalized, const Vector& loss);

QuotaMatrix pseudo_expert(const Vector& hospitalized, const Vector& loss,
                          double x_h = 1.0, double x_l = 168.0);

// A controller mapping observations to quota matrices.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void reset() {}
  virtual QuotaMatrix act(const Observation& obs) = 0;
};

class NoInterventionPolicy final : public Policy {
 public:
  std::string name() const override { return "no-intervention"; }
  QuotaMatrix act(const Observation& obs) override;
};

class FixedPolicy final : public Policy {
 public:
  explicit FixedPolicy(double x_q) : x_q_(x_q) {}
  std::string name() const override;
  QuotaMatrix act(const Observation& obs) override;

 private:
  double x_q_;
};

class SoftPolicy final : public Policy {
 public:
  SoftPolicy(double x_h, double x_l, std::string name = "ep-soft")
      : x_h_(x_h), x_l_(x_l), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  QuotaMatrix act(const Observation& obs) override;

 private:
  double x_h_;
  double x_l_;
  std::string name_;
};

class LockdownPolicy final : public Policy {
 public:
  std::string name() const override { return "ep-lockdown"; }
  QuotaMatrix act(const Observation& obs) override;
};

// Decides once per day and holds the decision for 24 hours. Tracks the
// outflow its own decisions allowed from the demand window it observed.
class HardPolicy final : public Policy {
 public:
  HardPolicy(double x_h, int x_t) : x_h_(x_h), x_t_(x_t) {}
  std::string name() const override { return "ep-hard"; }
  void reset() override;
  QuotaMatrix act(const Observation& obs) override;

 private:
  double x_h_;
  int x_t_;
  std::optional<QuotaMatrix> current_;
  int decided_at_ = 0;
  // Allowed outflow per past hour, most recent last.
  std::deque<Vector> history_;
};

// Builds a baseline by name: no-intervention, ep-fixed, ep-soft, ep-hard,
// ep-lockdown, pseudo-expert. Throws ConfigError for unknown names.
std::unique_ptr<Policy> make_expert_policy(const std::string& name, const ExpertParams& params);

}  // namespace epiflow
