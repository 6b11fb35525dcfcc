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
#include "epiflow/agent.hpp"

#include <algorithm>
#include <cmath>

#include "epiflow/errors.hpp"
#include "epiflow/sihr.hpp"
#include "json.hpp"

namespace epiflow {

using nn::Parameter;
using nn::Tape;

FeatureContext FeatureContext::From(const MobilitySeries& series, const EnvConfig& env,
                                    double delta_scale) {
  FeatureContext c;
  c.initial_population = series.initial_population();
  const std::vector<MeanOutflow> means = mean_outflows(series);
  c.mean_outflow = Vector(series.num_regions());
  for (Index i = 0; i < series.num_regions(); ++i) {
    const MeanOutflow& m = means[static_cast<std::size_t>(i)];
    c.mean_outflow[i] = m.zero_demand ? 1.0 : m.value;
  }
  c.h0 = env.h0;
  c.l0 = env.l0;
  c.control_period = env.control_period;
  c.delta_scale = delta_scale;
  return c;
}

GraphBatch build_graph_batch(const std::vector<const CompactObservation*>& observations,
                             const MobilitySeries& series, const FeatureContext& context) {
  const Index k = series.num_regions();
  const Index b_count = static_cast<Index>(observations.size());
  const int window = context.control_period;
  if (context.initial_population.size() != k || context.mean_outflow.size() != k) {
    throw DimensionError("feature context does not match the mobility series");
  }
  GraphBatch g;
  g.batch = b_count;
  g.num_regions = k;
  g.features = Matrix::Zero(b_count * k, kNumFeatures);
  g.transports.assign(window, Matrix::Zero(b_count * k, k));
  g.demand_ratios.assign(window, Matrix::Zero(b_count * k, k));
  g.masks.assign(window, Matrix::Zero(b_count * k, k));
  g.window_ratio = Matrix::Zero(b_count * k, k);

  const Vector inv_pop = context.initial_population.cwiseInverse();
  const Vector inv_mean = context.mean_outflow.cwiseInverse();
  for (Index b = 0; b < b_count; ++b) {
    const CompactObservation& o = *observations[static_cast<std::size_t>(b)];
    if (o.loss.size() != k || o.visible.SI.size() != k) {
      throw DimensionError("observation does not match region count");
    }
    auto f = g.features.middleRows(b * k, k);
    f.col(kFeatSI) = o.visible.SI.cwiseProduct(inv_pop);
    f.col(kFeatH) = o.visible.H / context.h0;
    f.col(kFeatR) = o.visible.R.cwiseProduct(inv_pop);
    f.col(kFeatDeltaSI) = context.delta_scale * o.delta.SI.cwiseProduct(inv_pop);
    f.col(kFeatDeltaH) = context.delta_scale * o.delta.H / context.h0;
    f.col(kFeatDeltaR) = context.delta_scale * o.delta.R.cwiseProduct(inv_pop);
    f.col(kFeatLoss) = o.loss / context.l0;
    f.col(kFeatBias).setOnes();

    Vector movable = o.visible.SI + o.visible.R;
    Vector demand_out = Vector::Zero(k);
    for (int c = 0; c < window; ++c) {
      const Matrix demand = series.demand(o.hour + c);
      const Matrix t = transport_fractions(demand, movable).fractions;
      g.transports[c].middleRows(b * k, k) = t;
      g.demand_ratios[c].middleRows(b * k, k) = inv_mean.asDiagonal() * demand;
      g.masks[c].middleRows(b * k, k) = (demand.array() > 0.0).cast<double>().matrix();
      demand_out += demand.rowwise().sum();
      const Vector keep = (Vector::Ones(k) - t.rowwise().sum()).cwiseMax(0.0);
      movable = movable.cwiseProduct(keep) + t.transpose() * movable;
    }
    f.col(kFeatDemand) = demand_out.cwiseProduct(inv_mean) / static_cast<double>(window);
  }
  for (int c = 0; c < window; ++c) g.window_ratio += g.demand_ratios[c];
  g.window_ratio /= static_cast<double>(window);
  return g;
}

GraphBatch build_graph_batch(const Observation& observation, const FeatureContext& context) {
  if (!observation.series) throw StateError("observation carries no mobility series");
  const CompactObservation compact = CompactObservation::From(observation);
  return build_graph_batch({&compact}, *observation.series, context);
}

Matrix graph_block(const Matrix& stacked, Index b, Index num_regions) {
  return stacked.middleRows(b * num_regions, num_regions);
}

namespace {

nn::EdgeInputs edge_inputs(Tape& tape, nn::GraphLayerKind kind, const GraphBatch& batch, int hour,
                           const Tape::Id* quota) {
  nn::EdgeInputs e;
  const std::size_t c = static_cast<std::size_t>(hour);
  switch (kind) {
    case nn::GraphLayerKind::kFlow: {
      const Tape::Id t = tape.constant_ref(batch.transports[c]);
      e.weights = quota != nullptr ? tape.hadamard(*quota, t) : t;
      break;
    }
    case nn::GraphLayerKind::kMean:
      e.mask = tape.constant_ref(batch.masks[c]);
      break;
    case nn::GraphLayerKind::kSoftmax: {
      const Tape::Id d = tape.constant_ref(batch.demand_ratios[c]);
      e.weights = quota != nullptr ? tape.hadamard(*quota, d) : d;
      e.mask = tape.constant_ref(batch.masks[c]);
      break;
    }
  }
  return e;
}

std::vector<nn::GraphLayer> make_graph_stack(const NetworkConfig& config, Index in_features,
                                             std::mt19937_64& rng, const std::string& name) {
  if (config.num_layers < 1 || config.hidden < 1) {
    throw ConfigError("network needs at least one layer and positive width");
  }
  std::vector<nn::GraphLayer> layers;
  Index width = in_features;
  for (int l = 0; l < config.num_layers; ++l) {
    layers.emplace_back(config.layer_kind, width, config.hidden, nn::Activation::kRelu,
                        name + ".gnn" + std::to_string(l), rng);
    width = config.hidden;
  }
  return layers;
}

std::vector<Parameter*> concat(std::vector<Parameter*> a, const std::vector<Parameter*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

Actor::Actor(const NetworkConfig& config, std::mt19937_64& rng, const std::string& name)
    : config_(config),
      layers_(make_graph_stack(config, kNumFeatures, rng, name)),
      w_src_(name + ".head.src", nn::glorot_uniform(config.hidden, 1, rng)),
      w_dst_(name + ".head.dst", nn::glorot_uniform(config.hidden, 1, rng)),
      w_dem_(name + ".head.demand", Matrix::Zero(1, config.num_layers)),
      b_(name + ".head.bias", Matrix::Zero(1, 1)) {}

Tape::Id Actor::forward(Tape& tape, const GraphBatch& batch) {
  const int window = static_cast<int>(batch.transports.size());
  if (window != w_dem_.value.cols()) {
    throw DimensionError("actor expects a demand window of " +
                         std::to_string(w_dem_.value.cols()) + " hours");
  }
  Tape::Id f = tape.constant_ref(batch.features);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const int hour = static_cast<int>(l) % window;
    f = layers_[l].forward(tape, f, edge_inputs(tape, config_.layer_kind, batch, hour, nullptr),
                           batch.num_regions);
  }
  const Tape::Id src = tape.matmul(f, tape.param(w_src_));
  const Tape::Id dst = tape.matmul(f, tape.param(w_dst_));
  std::vector<Tape::Id> ratios;
  for (const Matrix& d : batch.demand_ratios) ratios.push_back(tape.constant_ref(d));
  const Tape::Id logits =
      tape.add_scalar(tape.add(tape.pairwise_sum(src, dst, batch.num_regions),
                               tape.weighted_sum(ratios, tape.param(w_dem_))),
                      tape.param(b_));
  return tape.activate(logits, nn::Activation::kSigmoid);
}

Matrix Actor::act(const GraphBatch& batch) {
  Tape tape;
  const Matrix p = tape.value(forward(tape, batch));
  if (!p.allFinite()) throw NumericError("actor produced non-finite quota rates");
  return p;
}

std::vector<Parameter*> Actor::parameters() {
  std::vector<Parameter*> out;
  for (nn::GraphLayer& l : layers_) out = concat(std::move(out), l.parameters());
  out.push_back(&w_src_);
  out.push_back(&w_dst_);
  out.push_back(&w_dem_);
  out.push_back(&b_);
  return out;
}

Critic::Critic(const NetworkConfig& config, std::mt19937_64& rng, const std::string& name)
    : config_(config),
      layers_(make_graph_stack(config, kNumFeatures + 1, rng, name)),
      hidden_(config.hidden, config.hidden, nn::Activation::kRelu, name + ".dense", rng),
      out_(config.hidden, 1, nn::Activation::kIdentity, name + ".out", rng) {}

Tape::Id Critic::forward(Tape& tape, const GraphBatch& batch, Tape::Id quota) {
  const int window = static_cast<int>(batch.transports.size());
  // Allowed share of the window's demand, per origin.
  const Tape::Id allowed =
      tape.matmul(tape.hadamard(quota, tape.constant_ref(batch.window_ratio)),
                  tape.constant(Matrix::Ones(batch.num_regions, 1)));
  Tape::Id f = tape.concat_cols(tape.constant_ref(batch.features), allowed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const int hour = static_cast<int>(l) % window;
    f = layers_[l].forward(tape, f, edge_inputs(tape, config_.layer_kind, batch, hour, &quota),
                           batch.num_regions);
  }
  const Tape::Id pooled = tape.block_mean(f, batch.num_regions);
  return out_.forward(tape, hidden_.forward(tape, pooled));
}

Vector Critic::value(const GraphBatch& batch, const Matrix& quota) {
  Tape tape;
  return tape.value(forward(tape, batch, tape.constant(quota))).col(0);
}

std::vector<Parameter*> Critic::parameters() {
  std::vector<Parameter*> out;
  for (nn::GraphLayer& l : layers_) out = concat(std::move(out), l.parameters());
  out = concat(std::move(out), hidden_.parameters());
  return concat(std::move(out), out_.parameters());
}

double ExplorationState::epsilon(std::int64_t step) const {
  if (decay_steps <= 0) return 0.0;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return epsilon0 * std::max(0.0, 1.0 - frac);
}

double ExplorationState::adapt(double distance) {
  if (distance < noise_target) {
    noise_std *= adapt_factor;
  } else if (distance > noise_target) {
    noise_std /= adapt_factor;
  }
  return noise_std;
}

DdpgAgent::DdpgAgent(std::shared_ptr<const MobilitySeries> series, FeatureContext context,
                     AgentConfig config, ExpertParams experts, std::uint64_t seed)
    : series_(std::move(series)),
      context_(std::move(context)),
      config_(config),
      experts_(experts),
      rng_(seed) {
  if (!series_) throw ConfigError("agent needs a mobility series");
  if (config_.batch_size < 1 || config_.buffer_size < config_.batch_size) {
    throw ConfigError("batch_size must be positive and no larger than buffer_size");
  }
  if (!(config_.gamma >= 0.0 && config_.gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(config_.tau > 0.0 && config_.tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  experts_.validate();
  actor_ = Actor(config_.network, rng_, "actor");
  critic_ = Critic(config_.network, rng_, "critic");
  actor_target_ = actor_;
  critic_target_ = critic_;
  actor_perturbed_ = actor_;
  actor_opt_ = nn::AdamState::For(actor_.parameters(), {config_.actor_lr});
  critic_opt_ = nn::AdamState::For(critic_.parameters(), {config_.critic_lr});
  exploration_.noise_std = config_.noise_std;
  exploration_.noise_target = config_.noise_target;
  exploration_.adapt_factor = config_.noise_adapt_factor;
  exploration_.epsilon0 = config_.use_expert ? config_.epsilon0 : 0.0;
  exploration_.decay_steps = std::max<std::int64_t>(1, config_.epsilon_decay_steps);
}

QuotaMatrix DdpgAgent::act(const Observation& obs) {
  return QuotaMatrix(actor_.act(build_graph_batch(obs, context_)));
}

SelectedAction DdpgAgent::select_action(const Observation& obs, std::int64_t step, ActMode mode) {
  if (mode == ActMode::kEval) return {act(obs), ActionSource::kAgent};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng_) < exploration_.epsilon(step)) {
    return {pseudo_expert(obs.visible.H, obs.loss, experts_.pseudo_x_h, experts_.pseudo_x_l),
            ActionSource::kExpert};
  }
  return {QuotaMatrix(actor_perturbed_.act(build_graph_batch(obs, context_))),
          ActionSource::kAgent};
}

double DdpgAgent::training_reward(const StepOutcome& outcome) const {
  const double cost = outcome.info.infection_cost + outcome.info.mobility_cost;
  return -(std::min(cost, config_.cost_clip) + outcome.info.penalty) * config_.reward_scale;
}

TrainLosses DdpgAgent::train_step(const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw StateError("train_step needs a non-empty batch");
  const Index k = series_->num_regions();
  const Index b_count = static_cast<Index>(batch.size());
  std::vector<const CompactObservation*> obs;
  std::vector<const CompactObservation*> next;
  Matrix actions(b_count * k, k);
  Vector rewards(b_count);
  Vector not_done(b_count);
  for (Index b = 0; b < b_count; ++b) {
    const Transition& t = *batch[static_cast<std::size_t>(b)];
    obs.push_back(&t.observation);
    next.push_back(&t.next_observation);
    actions.middleRows(b * k, k) = t.action;
    rewards[b] = t.reward;
    not_done[b] = t.done ? 0.0 : 1.0;
  }
  const GraphBatch s = build_graph_batch(obs, *series_, context_);
  const GraphBatch s_next = build_graph_batch(next, *series_, context_);

  Vector target;
  {
    Tape tape;
    tape.freeze(actor_target_.parameters());
    tape.freeze(critic_target_.parameters());
    const Tape::Id p = actor_target_.forward(tape, s_next);
    const Vector q_next = tape.value(critic_target_.forward(tape, s_next, p)).col(0);
    target = rewards + config_.gamma * not_done.cwiseProduct(q_next);
  }

  TrainLosses losses;
  const std::vector<Parameter*> critic_params = critic_.parameters();
  const std::vector<Parameter*> actor_params = actor_.parameters();
  {
    Tape tape;
    const Tape::Id q = critic_.forward(tape, s, tape.constant(actions));
    const Tape::Id loss = tape.mean_squared_error(q, tape.constant(Matrix(target)));
    losses.critic_loss = tape.value(loss)(0, 0);
    if (!std::isfinite(losses.critic_loss)) throw NumericError("critic loss is not finite");
    for (Parameter* p : critic_params) p->zero_grad();
    tape.backward(loss);
    nn::check_finite_gradients(critic_params);
    nn::adam_update(critic_opt_, critic_params);
  }
  {
    Tape tape;
    tape.freeze(critic_params);
    const Tape::Id p = actor_.forward(tape, s);
    const Tape::Id objective = tape.mean(critic_.forward(tape, s, p));
    losses.actor_objective = tape.value(objective)(0, 0);
    if (!std::isfinite(losses.actor_objective)) throw NumericError("actor objective is not finite");
    for (Parameter* q : actor_params) q->zero_grad();
    tape.backward(tape.scale(objective, -1.0));
    nn::check_finite_gradients(actor_params);
    nn::adam_update(actor_opt_, actor_params);
  }
  soft_update(config_.tau);
  return losses;
}

void DdpgAgent::soft_update(double tau) {
  const auto blend = [tau](std::vector<Parameter*> online, std::vector<Parameter*> target) {
    for (std::size_t i = 0; i < online.size(); ++i) {
      target[i]->value = tau * online[i]->value + (1.0 - tau) * target[i]->value;
    }
  };
  blend(actor_.parameters(), actor_target_.parameters());
  blend(critic_.parameters(), critic_target_.parameters());
}

void DdpgAgent::perturb() {
  actor_perturbed_ = actor_;
  std::normal_distribution<double> noise(0.0, exploration_.noise_std);
  for (Parameter* p : actor_perturbed_.parameters()) {
    for (Index c = 0; c < p->value.cols(); ++c) {
      for (Index r = 0; r < p->value.rows(); ++r) p->value(r, c) += noise(rng_);
    }
  }
}

double DdpgAgent::policy_distance(const std::vector<const CompactObservation*>& observations) {
  const GraphBatch batch = build_graph_batch(observations, *series_, context_);
  const Matrix diff = actor_perturbed_.act(batch) - actor_.act(batch);
  return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

double DdpgAgent::adapt_noise(const std::vector<const CompactObservation*>& observations) {
  return exploration_.adapt(policy_distance(observations));
}

nn::Checkpoint DdpgAgent::to_checkpoint(std::int64_t step) const {
  auto& self = const_cast<DdpgAgent&>(*this);
  nn::Checkpoint c;
  c.step = step;
  c.networks["actor"] = nn::snapshot(self.actor_.parameters());
  c.networks["critic"] = nn::snapshot(self.critic_.parameters());
  c.networks["actor_target"] = nn::snapshot(self.actor_target_.parameters());
  c.networks["critic_target"] = nn::snapshot(self.critic_target_.parameters());
  c.optimizers["actor"] = actor_opt_;
  c.optimizers["critic"] = critic_opt_;
  c.scalars["noise_std"] = exploration_.noise_std;
  nlohmann::json cfg;
  cfg["hidden"] = config_.network.hidden;
  cfg["layer_kind"] = nn::to_string(config_.network.layer_kind);
  cfg["num_layers"] = config_.network.num_layers;
  cfg["num_regions"] = series_->num_regions();
  c.config_json = cfg.dump();
  return c;
}

void DdpgAgent::restore(const nn::Checkpoint& checkpoint) {
  const nlohmann::json cfg = nlohmann::json::parse(checkpoint.config_json);
  if (cfg.value("hidden", Index{-1}) != config_.network.hidden ||
      cfg.value("num_layers", -1) != config_.network.num_layers ||
      cfg.value("layer_kind", std::string()) != nn::to_string(config_.network.layer_kind)) {
    throw ConfigError("checkpoint network shape does not match the agent configuration");
  }
  const auto net = [&](const char* name) -> const std::vector<nn::NamedMatrix>& {
    const auto it = checkpoint.networks.find(name);
    if (it == checkpoint.networks.end()) {
      throw ParseError(std::string("checkpoint lacks network '") + name + "'", 0);
    }
    return it->second;
  };
  nn::restore(net("actor"), actor_.parameters());
  nn::restore(net("critic"), critic_.parameters());
  nn::restore(net("actor_target"), actor_target_.parameters());
  nn::restore(net("critic_target"), critic_target_.parameters());
  if (const auto it = checkpoint.optimizers.find("actor"); it != checkpoint.optimizers.end()) {
    actor_opt_ = it->second;
  }
  if (const auto it = checkpoint.optimizers.find("critic"); it != checkpoint.optimizers.end()) {
    critic_opt_ = it->second;
  }
  if (const auto it = checkpoint.scalars.find("noise_std"); it != checkpoint.scalars.end()) {
    exploration_.noise_std = it->second;
  }
  actor_perturbed_ = actor_;
}

}  // namespace epiflow
