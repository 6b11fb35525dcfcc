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
#include "epiflow/training.hpp"

#include <fstream>
#include <random>

#include "epiflow/errors.hpp"

namespace epiflow {

TrainingResult run_training(ControlEnv& env, DdpgAgent& agent, const TrainingConfig& config) {
  if (config.total_steps < 0) throw ConfigError("total_steps must be non-negative");
  if (!(config.max_seed_count >= 1.0)) throw ConfigError("max_seed_count must be >= 1");
  const AgentConfig& ac = agent.config();
  const std::size_t batch = static_cast<std::size_t>(ac.batch_size);
  std::mt19937_64 rng(config.seed);
  ReplayBuffer buffer(static_cast<std::size_t>(ac.buffer_size));
  agent.exploration().decay_steps =
      ac.epsilon_decay_steps > 0 ? ac.epsilon_decay_steps
                                 : std::max<std::int64_t>(1, config.total_steps / 2);
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);

  const auto save = [&](std::int64_t step) {
    if (config.out_dir.empty()) return;
    nn::save_checkpoint(agent.to_checkpoint(step),
                        config.out_dir / ("checkpoint_" + std::to_string(step) + ".json"));
  };

  TrainingResult result;
  std::int64_t step = 0;
  int episode = 0;
  while (step < config.total_steps) {
    Observation obs = env.reset(InitSpec::Random(rng(), config.max_seed_count));
    agent.perturb();
    EpisodeSummary summary;
    summary.episode = episode++;
    int expert_steps = 0;
    int episode_steps = 0;
    while (!env.done() && step < config.total_steps) {
      const SelectedAction sel = agent.select_action(obs, step, ActMode::kTrain);
      StepOutcome out = env.step(sel.quota);
      const bool terminal = out.done && out.info.reason != TerminationReason::kHorizon;
      buffer.add({CompactObservation::From(obs), sel.quota.rates(), agent.training_reward(out),
                  CompactObservation::From(out.observation), terminal});
      summary.reward += out.reward;
      expert_steps += sel.source == ActionSource::kExpert ? 1 : 0;
      ++episode_steps;
      ++step;
      if (buffer.size() >= batch) {
        agent.train_step(buffer.sample(batch, rng));
        if (ac.noise_adapt_interval > 0 && step % ac.noise_adapt_interval == 0) {
          std::vector<const CompactObservation*> states;
          for (const Transition* t : buffer.sample(batch, rng)) states.push_back(&t->observation);
          agent.adapt_noise(states);
          agent.perturb();
        }
      }
      if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0) save(step);
      obs = std::move(out.observation);
    }
    summary.steps = step;
    summary.termination_reason = to_string(env.done() ? env.log().reason : TerminationReason::kNone);
    summary.expert_fraction =
        episode_steps > 0 ? static_cast<double>(expert_steps) / episode_steps : 0.0;
    result.episodes.push_back(std::move(summary));
  }
  result.steps = step;
  result.final_checkpoint = agent.to_checkpoint(step);
  if (!config.out_dir.empty()) {
    nn::save_checkpoint(result.final_checkpoint, config.out_dir / "checkpoint_final.json");
  }
  return result;
}

void save_training_log(const std::vector<EpisodeSummary>& episodes,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out.precision(17);
  out << "episode,steps,reward,termination_reason,expert_fraction\n";
  for (const EpisodeSummary& e : episodes) {
    out << e.episode << ',' << e.steps << ',' << e.reward << ',' << e.termination_reason << ','
        << e.expert_fraction << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace epiflow
