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
#include "epiflow/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "epiflow/errors.hpp"
#include "json.hpp"

namespace epiflow {
namespace {

using nlohmann::ordered_json;

// Binds JSON keys of one object to fields, in both directions.
class Section {
 public:
  template <typename T>
  Section& field(const std::string& key, T& value) {
    readers_[key] = [&value, key, this](const ordered_json& j) {
      try {
        value = j.get<T>();
      } catch (const ordered_json::exception&) {
        throw ConfigError("config key '" + path_ + key + "' has the wrong type");
      }
    };
    writers_.emplace_back(key, [&value](ordered_json& out, const std::string& k) { out[k] = value; });
    return *this;
  }

  Section& path_field(const std::string& key, std::filesystem::path& value) {
    readers_[key] = [&value, key, this](const ordered_json& j) {
      if (!j.is_string()) throw ConfigError("config key '" + path_ + key + "' must be a string");
      value = j.get<std::string>();
    };
    writers_.emplace_back(key, [&value](ordered_json& out, const std::string& k) {
      out[k] = value.generic_string();
    });
    return *this;
  }

  Section& custom(const std::string& key, std::function<void(const ordered_json&)> read,
                  std::function<ordered_json()> write) {
    readers_[key] = std::move(read);
    writers_.emplace_back(key, [write](ordered_json& out, const std::string& k) { out[k] = write(); });
    return *this;
  }

  explicit Section(std::string path) : path_(std::move(path)) {}

  void read(const ordered_json& j) const {
    if (!j.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
    for (const auto& [key, value] : j.items()) {
      const auto it = readers_.find(key);
      if (it == readers_.end()) throw ConfigError("unknown config key '" + path_ + key + "'");
      it->second(value);
    }
  }

  ordered_json write() const {
    ordered_json out = ordered_json::object();
    for (const auto& [key, w] : writers_) w(out, key);
    return out;
  }

 private:
  std::string path_;
  std::map<std::string, std::function<void(const ordered_json&)>> readers_;
  std::vector<std::pair<std::string, std::function<void(ordered_json&, const std::string&)>>>
      writers_;
};

struct Schema {
  Section root{""};
  Section city{"city."};
  Section disease{"disease."};
  Section env{"env."};
  Section network{"agent.network."};
  Section agent{"agent."};
  Section experts{"experts."};
  Section training{"training."};
  Section evaluation{"evaluation."};
  Section data{"data."};

  explicit Schema(RunConfig& c) {
    city.field("grid_rows", c.city.grid_rows)
        .field("grid_cols", c.city.grid_cols)
        .field("mean_population", c.city.mean_population)
        .field("p_move", c.city.p_move)
        .field("commute_fraction", c.city.commute_fraction)
        .field("days", c.city.days)
        .field("kernel_radius", c.city.kernel_radius);
    disease.field("beta_s", c.disease.beta_s)
        .field("beta_m", c.disease.beta_m)
        .field("gamma", c.disease.gamma)
        .field("theta", c.disease.theta)
        .field("hospitalized_in_staying_denominator",
               c.disease.hospitalized_in_staying_denominator);
    env.field("control_period", c.env.control_period)
        .field("t_start_days", c.env.t_start_days)
        .field("horizon_days", c.env.horizon_days)
        .field("k_h", c.env.k_h)
        .field("h0", c.env.h0)
        .field("l0", c.env.l0)
        .field("lambda", c.env.lambda)
        .field("infection_threshold", c.env.infection_threshold)
        .field("lockdown_threshold", c.env.lockdown_threshold)
        .field("enforce_thresholds", c.env.enforce_thresholds)
        .field("terminal_penalty", c.env.terminal_penalty)
        .field("extinction_level", c.env.extinction_level);
    network.field("hidden", c.agent.network.hidden)
        .custom(
            "layer_kind",
            [&c](const ordered_json& j) {
              if (!j.is_string()) throw ConfigError("agent.network.layer_kind must be a string");
              c.agent.network.layer_kind = nn::parse_graph_layer_kind(j.get<std::string>());
            },
            [&c] { return ordered_json(nn::to_string(c.agent.network.layer_kind)); })
        .field("num_layers", c.agent.network.num_layers);
    agent.custom(
             "network", [this](const ordered_json& j) { network.read(j); },
             [this] { return network.write(); })
        .field("actor_lr", c.agent.actor_lr)
        .field("critic_lr", c.agent.critic_lr)
        .field("gamma", c.agent.gamma)
        .field("tau", c.agent.tau)
        .field("batch_size", c.agent.batch_size)
        .field("buffer_size", c.agent.buffer_size)
        .field("reward_scale", c.agent.reward_scale)
        .field("cost_clip", c.agent.cost_clip)
        .field("epsilon0", c.agent.epsilon0)
        .field("epsilon_decay_steps", c.agent.epsilon_decay_steps)
        .field("use_expert", c.agent.use_expert)
        .field("noise_std", c.agent.noise_std)
        .field("noise_target", c.agent.noise_target)
        .field("noise_adapt_factor", c.agent.noise_adapt_factor)
        .field("noise_adapt_interval", c.agent.noise_adapt_interval)
        .field("delta_scale", c.agent.delta_scale);
    experts.field("x_q", c.experts.x_q)
        .field("x_h", c.experts.x_h)
        .field("x_l", c.experts.x_l)
        .field("x_t", c.experts.x_t)
        .field("pseudo_x_h", c.experts.pseudo_x_h)
        .field("pseudo_x_l", c.experts.pseudo_x_l);
    training.field("total_steps", c.training.total_steps)
        .field("max_seed_count", c.training.max_seed_count)
        .field("checkpoint_every", c.training.checkpoint_every);
    evaluation.field("seed_region", c.evaluation.seed_region)
        .field("seed_count", c.evaluation.seed_count)
        .field("fixed_rates", c.evaluation.fixed_rates)
        .field("enforce_thresholds", c.evaluation.enforce_thresholds)
        .field("agent_t_starts", c.evaluation.agent_t_starts)
        .field("region_csv", c.evaluation.region_csv);
    data.path_field("od_path", c.data.od_path).field("repeats", c.data.repeats);
    root.field("seed", c.seed)
        .path_field("out_dir", c.out_dir)
        .custom("city", [this](const ordered_json& j) { city.read(j); }, [this] { return city.write(); })
        .custom("disease", [this](const ordered_json& j) { disease.read(j); },
                [this] { return disease.write(); })
        .custom("env", [this](const ordered_json& j) { env.read(j); }, [this] { return env.write(); })
        .custom("agent", [this](const ordered_json& j) { agent.read(j); },
                [this] { return agent.write(); })
        .custom("experts", [this](const ordered_json& j) { experts.read(j); },
                [this] { return experts.write(); })
        .custom("training", [this](const ordered_json& j) { training.read(j); },
                [this] { return training.write(); })
        .custom("evaluation", [this](const ordered_json& j) { evaluation.read(j); },
                [this] { return evaluation.write(); })
        .custom("data", [this](const ordered_json& j) { data.read(j); }, [this] { return data.write(); });
  }
};

}  // namespace

void RunConfig::validate() const {
  city.validate();
  disease.validate();
  env.validate();
  experts.validate();
  if (agent.network.num_layers != env.control_period) {
    throw ConfigError("agent.network.num_layers must equal env.control_period");
  }
  if (agent.network.hidden < 1) throw ConfigError("agent.network.hidden must be positive");
  if (agent.batch_size < 1 || agent.buffer_size < agent.batch_size) {
    throw ConfigError("agent.batch_size must be in [1, buffer_size]");
  }
  if (training.total_steps < 0) throw ConfigError("training.total_steps must be non-negative");
  if (!(training.max_seed_count >= 1.0)) throw ConfigError("training.max_seed_count must be >= 1");
  if (evaluation.seed_count < 0.0) throw ConfigError("evaluation.seed_count must be non-negative");
  if (evaluation.seed_region < 0 || evaluation.seed_region >= city.num_regions()) {
    if (data.od_path.empty()) throw ConfigError("evaluation.seed_region out of range");
  }
  for (const double x : evaluation.fixed_rates) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("evaluation.fixed_rates must lie in [0, 1]");
  }
  if (data.repeats < 1) throw ConfigError("data.repeats must be >= 1");
}

RunConfig parse_run_config(const std::string& json_text, RunConfig base) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Schema schema(base);
  schema.root.read(j);
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

std::string to_json(const RunConfig& config, int indent) {
  RunConfig copy = config;
  Schema schema(copy);
  return schema.root.write().dump(indent);
}

}  // namespace epiflow
