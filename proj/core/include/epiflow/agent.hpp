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
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "epiflow/control_env.hpp"
#include "epiflow/experts.hpp"
#include "epiflow/mobility.hpp"
#include "epiflow/nn/adam.hpp"
#include "epiflow/nn/checkpoint.hpp"
#include "epiflow/nn/layers.hpp"
#include "epiflow/nn/tape.hpp"
#include "epiflow/replay_buffer.hpp"

namespace epiflow {

// Constants that turn raw observations into O(1) node features.
struct FeatureContext {
  Vector initial_population;
  // Mean outflow per region; zero-demand regions hold 1 so ratios stay 0.
  Vector mean_outflow;
  double h0 = 3.0;
  double l0 = 72.0;
  int control_period = 4;
  // Multiplier on hourly deltas so they are comparable to levels.
  double delta_scale = 24.0;

  static FeatureContext From(const MobilitySeries& series, const EnvConfig& env,
                             double delta_scale = 24.0);
};

// Node feature columns, in order.
enum FeatureColumn : Index {
  kFeatSI,
  kFeatH,
  kFeatR,
  kFeatDeltaSI,
  kFeatDeltaH,
  kFeatDeltaR,
  kFeatLoss,
  kFeatBias,
  kFeatDemand,
  kNumFeatures,
};

// A batch of B observations stacked as B graphs of K nodes. Edge matrices
// are (B*K) x K with entry [b*K + j, i] describing edge j -> i of graph b.
struct GraphBatch {
  Index batch = 0;
  Index num_regions = 0;
  Matrix features;
  // Per window hour: demand transport fractions M_d / N_mov with N_mov
  // propagated under unrestricted demand.
  std::vector<Matrix> transports;
  // Per window hour: M_d[i, j] / mean outflow of i.
  std::vector<Matrix> demand_ratios;
  // Per window hour: 1 where demand is positive.
  std::vector<Matrix> masks;
  // Mean of demand_ratios over the window.
  Matrix window_ratio;
};

GraphBatch build_graph_batch(const std::vector<const CompactObservation*>& observations,
                             const MobilitySeries& series, const FeatureContext& context);
GraphBatch build_graph_batch(const Observation& observation, const FeatureContext& context);

struct NetworkConfig {
  Index hidden = 32;
  nn::GraphLayerKind layer_kind = nn::GraphLayerKind::kFlow;
  // Graph layers; one per window hour, so this equals the control period.
  int num_layers = 4;
};

class Actor {
 public:
  Actor() = default;
  Actor(const NetworkConfig& config, std::mt19937_64& rng, const std::string& name = "actor");

  // (B*K) x K quota rates in [0, 1].
  nn::Tape::Id forward(nn::Tape& tape, const GraphBatch& batch);
  Matrix act(const GraphBatch& batch);

  std::vector<nn::Parameter*> parameters();
  const NetworkConfig& config() const { return config_; }

  // Edge head parameters, exposed for tests.
  nn::Parameter& head_src() { return w_src_; }
  nn::Parameter& head_dst() { return w_dst_; }
  nn::Parameter& head_demand() { return w_dem_; }
  nn::Parameter& head_bias() { return b_; }

 private:
  NetworkConfig config_;
  std::vector<nn::GraphLayer> layers_;
  nn::Parameter w_src_;
  nn::Parameter w_dst_;
  nn::Parameter w_dem_;
  nn::Parameter b_;
};

class Critic {
 public:
  Critic() = default;
  Critic(const NetworkConfig& config, std::mt19937_64& rng, const std::string& name = "critic");

  // B x 1 values for quota node p of shape (B*K) x K.
  nn::Tape::Id forward(nn::Tape& tape, const GraphBatch& batch, nn::Tape::Id quota);
  Vector value(const GraphBatch& batch, const Matrix& quota);

  std::vector<nn::Parameter*> parameters();

 private:
  NetworkConfig config_;
  std::vector<nn::GraphLayer> layers_;
  nn::DenseLayer hidden_;
  nn::DenseLayer out_;
};

// Parameter-noise scale and expert-mixing schedule.
struct ExplorationState {
  double noise_std = 0.05;
  double noise_target = 0.1;
  double adapt_factor = 1.01;
  double epsilon0 = 0.5;
  std::int64_t decay_steps = 1;

  // epsilon0 * max(0, 1 - step / decay_steps).
  double epsilon(std::int64_t step) const;
  // Scales noise_std up when distance < target, down when above.
  double adapt(double distance);
};

struct AgentConfig {
  NetworkConfig network;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.001;
  int batch_size = 32;
  int buffer_size = 100000;
  // Training reward is -(min(cost, cost_clip) + penalty) * reward_scale.
  double reward_scale = 0.01;
  double cost_clip = 1000.0;
  double epsilon0 = 0.5;
  // 0 means half of the total training steps.
  std::int64_t epsilon_decay_steps = 0;
  bool use_expert = true;
  double noise_std = 0.05;
  double noise_target = 0.1;
  double noise_adapt_factor = 1.01;
  int noise_adapt_interval = 50;
  double delta_scale = 24.0;
};

enum class ActionSource { kAgent, kExpert };
enum class ActMode { kTrain, kEval };

struct SelectedAction {
  QuotaMatrix quota;
  ActionSource source = ActionSource::kAgent;
};

struct TrainLosses {
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

class DdpgAgent {
 public:
  DdpgAgent(std::shared_ptr<const MobilitySeries> series, FeatureContext context,
            AgentConfig config, ExpertParams experts, std::uint64_t seed);

  // Clean actor output.
  QuotaMatrix act(const Observation& obs);
  SelectedAction select_action(const Observation& obs, std::int64_t step, ActMode mode);

  double training_reward(const StepOutcome& outcome) const;
  TrainLosses train_step(const std::vector<const Transition*>& batch);
  // Soft update with rate tau (1 copies the online weights).
  void soft_update(double tau);

  // Redraws the perturbed actor around the current actor.
  void perturb();
  // RMS quota difference between perturbed and clean actor on the batch.
  double policy_distance(const std::vector<const CompactObservation*>& observations);
  double adapt_noise(const std::vector<const CompactObservation*>& observations);

  nn::Checkpoint to_checkpoint(std::int64_t step) const;
  void restore(const nn::Checkpoint& checkpoint);

  Actor& actor() { return actor_; }
  Critic& critic() { return critic_; }
  Actor& target_actor() { return actor_target_; }
  Critic& target_critic() { return critic_target_; }
  ExplorationState& exploration() { return exploration_; }
  const AgentConfig& config() const { return config_; }
  const FeatureContext& context() const { return context_; }
  const MobilitySeries& series() const { return *series_; }

 private:
  std::shared_ptr<const MobilitySeries> series_;
  FeatureContext context_;
  AgentConfig config_;
  ExpertParams experts_;
  std::mt19937_64 rng_;

  Actor actor_;
  Actor actor_target_;
  Actor actor_perturbed_;
  Critic critic_;
  Critic critic_target_;
  nn::AdamState actor_opt_;
  nn::AdamState critic_opt_;
  ExplorationState exploration_;
};

// Evaluation-mode wrapper so an agent runs through the expert interfaces.
class AgentPolicy final : public Policy {
 public:
  explicit AgentPolicy(DdpgAgent& agent) : agent_(agent) {}
  std::string name() const override { return "agent"; }
  QuotaMatrix act(const Observation& obs) override { return agent_.act(obs); }

 private:
  DdpgAgent& agent_;
};

// Copies per-graph rows of a (B*K) x K matrix into graph b's K x K block.
Matrix graph_block(const Matrix& stacked, Index b, Index num_regions);

}  // namespace epiflow
