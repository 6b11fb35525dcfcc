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
// epiflow command line: gen-data, simulate, train, evaluate.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "epiflow/agent.hpp"
#include "epiflow/control_env.hpp"
#include "epiflow/errors.hpp"
#include "epiflow/evaluation.hpp"
#include "epiflow/experts.hpp"
#include "epiflow/mobility.hpp"
#include "epiflow/nn/checkpoint.hpp"
#include "epiflow/run_config.hpp"
#include "epiflow/seeding.hpp"
#include "epiflow/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace epiflow {
namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct Seeds {
  std::uint64_t city = 0;
  std::uint64_t env = 0;
  std::uint64_t agent = 0;
  std::uint64_t train = 0;

  static Seeds From(std::uint64_t global) {
    return {derive_seed(global, "city"), derive_seed(global, "env"),
            derive_seed(global, "agent"), derive_seed(global, "train")};
  }
};

// Defaults < config file < EPIFLOW_OUT_DIR < flags.
RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig c;
  if (!flags.config_path.empty()) c = load_run_config(flags.config_path);
  if (const char* env = std::getenv("EPIFLOW_OUT_DIR"); env != nullptr && *env != '\0') {
    c.out_dir = env;
  }
  if (flags.seed) c.seed = *flags.seed;
  if (!flags.out_dir.empty()) c.out_dir = flags.out_dir;
  return c;
}

std::shared_ptr<const MobilitySeries> load_series(const RunConfig& c, const Seeds& seeds) {
  MobilitySeries base;
  if (!c.data.od_path.empty()) {
    base = load_od_csv(c.data.od_path);
  } else {
    CityGenParams city = c.city;
    city.seed = seeds.city;
    base = generate_synthetic_city(city);
  }
  if (c.evaluation.seed_region >= base.num_regions()) {
    throw ConfigError("evaluation.seed_region out of range for the loaded city");
  }
  const int needed = c.env.horizon_hours();
  int repeats = c.data.repeats;
  while (base.horizon() * repeats < needed) ++repeats;
  return std::make_shared<const MobilitySeries>(repeats > 1 ? base.prolonged(repeats) : base);
}

// Manifest lists outputs with sizes; no clocks, so reruns compare equal.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config, const Seeds& seeds)
      : dir_(config.out_dir) {
    body_["command"] = std::move(command);
    body_["seed"] = config.seed;
    body_["derived_seeds"] = {{"city", seeds.city},
                              {"env", seeds.env},
                              {"agent", seeds.agent},
                              {"train", seeds.train}};
    body_["config"] = ordered_json::parse(to_json(config));
    // Where the files went is not part of their content.
    body_["config"].erase("out_dir");
    body_["outputs"] = ordered_json::array();
  }

  ordered_json& extra() { return body_; }

  void add(const fs::path& file) {
    const fs::path rel = fs::relative(file, dir_);
    if (!fs::exists(file)) throw Error("expected output missing: " + file.string());
    body_["outputs"].push_back({{"path", rel.generic_string()}, {"bytes", fs::file_size(file)}});
  }

  void write() const {
    const fs::path p = dir_ / "manifest.json";
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << body_.dump(2) << '\n';
    if (!out) throw Error("failed writing " + p.string());
  }

 private:
  fs::path dir_;
  ordered_json body_;
};

std::unique_ptr<DdpgAgent> load_agent(const fs::path& checkpoint_path, RunConfig& c,
                                      std::shared_ptr<const MobilitySeries> series,
                                      const Seeds& seeds) {
  if (!fs::exists(checkpoint_path)) {
    throw Error("checkpoint not found: " + checkpoint_path.string());
  }
  const nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint_path);
  // The checkpoint fixes the network shape, whatever the config says.
  const auto shape = nlohmann::json::parse(ckpt.config_json);
  c.agent.network.hidden = shape.at("hidden").get<Index>();
  c.agent.network.num_layers = shape.at("num_layers").get<int>();
  c.agent.network.layer_kind =
      nn::parse_graph_layer_kind(shape.at("layer_kind").get<std::string>());
  if (shape.at("num_regions").get<Index>() != series->num_regions()) {
    throw ConfigError("checkpoint was trained on a city with a different region count");
  }
  auto agent = std::make_unique<DdpgAgent>(series, FeatureContext::From(*series, c.env),
                                           c.agent, c.experts, seeds.agent);
  agent->restore(ckpt);
  return agent;
}

InitSpec evaluation_init(const RunConfig& c) {
  return InitSpec::Fixed(c.evaluation.seed_region, c.evaluation.seed_count);
}

EnvConfig evaluation_env(const RunConfig& c, int t_start_days) {
  EnvConfig e = c.env;
  e.t_start_days = t_start_days;
  e.enforce_thresholds = c.evaluation.enforce_thresholds;
  e.record_region_detail = true;
  return e;
}

int cmd_gen_data(const RunConfig& c) {
  const Seeds seeds = Seeds::From(c.seed);
  CityGenParams city = c.city;
  city.seed = seeds.city;
  const MobilitySeries series = generate_synthetic_city(city);
  fs::create_directories(c.out_dir);
  const fs::path od = c.out_dir / "od.csv";
  save_od_csv(series, od);
  Manifest m("gen-data", c, seeds);
  m.add(od);
  m.add(population_path_for(od));
  m.extra()["num_regions"] = series.num_regions();
  m.extra()["hours"] = series.horizon();
  m.extra()["realized_move_probability"] = realized_move_probability(series);
  m.write();
  std::cout << "wrote " << series.num_regions() << "-region city to " << od.string() << '\n';
  return 0;
}

int cmd_simulate(RunConfig c, const std::string& policy_name, const std::string& checkpoint,
                 std::optional<int> t_start) {
  const Seeds seeds = Seeds::From(c.seed);
  const auto series = load_series(c, seeds);
  const int start = t_start.value_or(c.env.t_start_days);
  const EnvConfig env_cfg = evaluation_env(c, start);

  std::unique_ptr<DdpgAgent> agent;
  std::unique_ptr<Policy> policy;
  if (policy_name == "agent") {
    if (checkpoint.empty()) throw ConfigError("--policy agent needs --checkpoint");
    agent = load_agent(checkpoint, c, series, seeds);
    policy = std::make_unique<AgentPolicy>(*agent);
  } else {
    policy = make_expert_policy(policy_name, c.experts);
  }

  ControlEnv env(series, c.disease, env_cfg);
  const EpisodeLog log = run_episode(env, *policy, evaluation_init(c));
  SuiteRow row;
  row.policy = policy->name();
  row.t_start_days = start;
  row.metrics = compute_metrics(log);
  row.episode_reward = log.total_reward;
  row.termination_reason = to_string(log.reason);

  fs::create_directories(c.out_dir);
  Manifest m("simulate", c, seeds);
  const fs::path report_csv = c.out_dir / "metrics.csv";
  const fs::path report_json = c.out_dir / "metrics.json";
  const fs::path rewards = c.out_dir / "rewards.csv";
  save_report_csv({row}, report_csv);
  save_report_json({row}, report_json);
  validate_report_json(report_json);
  log.save_reward_csv(rewards);
  m.add(report_csv);
  m.add(report_json);
  m.add(rewards);
  if (c.evaluation.region_csv) {
    const fs::path regions = c.out_dir / "regions.csv";
    log.save_region_csv(regions);
    m.add(regions);
  }
  export_figure_data(log, c.out_dir);
  for (const char* f : {"h_curve.csv", "quota_grid.csv", "quota_histogram.csv"}) {
    m.add(c.out_dir / f);
  }
  m.extra()["policy"] = row.policy;
  m.extra()["termination_reason"] = row.termination_reason;
  m.write();
  std::cout << row.policy << ": reward " << row.episode_reward << " mean_h " << row.metrics.mean_h
            << " q " << row.metrics.q << " (" << row.termination_reason << ")\n";
  return 0;
}

void apply_ablation(RunConfig& c, const std::string& ablation) {
  if (ablation.empty()) return;
  if (ablation == "gnn-mean") {
    c.agent.network.layer_kind = nn::GraphLayerKind::kMean;
  } else if (ablation == "gnn-softmax") {
    c.agent.network.layer_kind = nn::GraphLayerKind::kSoftmax;
  } else if (ablation == "no-expert") {
    c.agent.use_expert = false;
  } else if (ablation == "no-thresholds") {
    c.env.enforce_thresholds = false;
  } else {
    throw ConfigError("unknown ablation '" + ablation + "'");
  }
}

int cmd_train(RunConfig c, std::optional<std::int64_t> steps, const std::string& ablation) {
  apply_ablation(c, ablation);
  if (steps) c.training.total_steps = *steps;
  c.validate();
  const Seeds seeds = Seeds::From(c.seed);
  const auto series = load_series(c, seeds);
  EnvConfig env_cfg = c.env;
  env_cfg.record_region_detail = false;
  ControlEnv env(series, c.disease, env_cfg);
  DdpgAgent agent(series, FeatureContext::From(*series, c.env), c.agent, c.experts, seeds.agent);

  TrainingConfig tc = c.training;
  tc.out_dir = c.out_dir;
  tc.seed = seeds.train;
  fs::create_directories(c.out_dir);
  const TrainingResult result = run_training(env, agent, tc);

  Manifest m("train", c, seeds);
  const fs::path log_path = c.out_dir / "training_log.csv";
  save_training_log(result.episodes, log_path);
  m.add(log_path);
  if (tc.checkpoint_every > 0) {
    for (std::int64_t s = tc.checkpoint_every; s < result.steps; s += tc.checkpoint_every) {
      m.add(c.out_dir / ("checkpoint_" + std::to_string(s) + ".json"));
    }
  }
  m.add(c.out_dir / "checkpoint_final.json");
  m.extra()["ablation"] = ablation.empty() ? "none" : ablation;
  m.extra()["steps"] = result.steps;
  m.extra()["episodes"] = result.episodes.size();
  m.write();
  std::cout << "trained " << result.steps << " steps over " << result.episodes.size()
            << " episodes\n";
  return 0;
}

int cmd_evaluate(RunConfig c, const std::string& checkpoint, std::optional<int> t_start) {
  const Seeds seeds = Seeds::From(c.seed);
  const auto series = load_series(c, seeds);
  const int start = t_start.value_or(c.env.t_start_days);
  const InitSpec init = evaluation_init(c);

  std::vector<SuiteRow> rows =
      run_baseline_suite(series, c.disease, evaluation_env(c, start), c.experts,
                         default_baselines(), c.evaluation.fixed_rates, init);
  if (!checkpoint.empty()) {
    auto agent = load_agent(checkpoint, c, series, seeds);
    AgentPolicy policy(*agent);
    std::vector<int> starts = c.evaluation.agent_t_starts;
    if (t_start) starts = {*t_start};
    for (const int s : starts) {
      rows.push_back(evaluate_policy(series, c.disease, evaluation_env(c, s), policy, init));
    }
  }

  fs::create_directories(c.out_dir);
  Manifest m("evaluate", c, seeds);
  const fs::path csv = c.out_dir / "report.csv";
  const fs::path json = c.out_dir / "report.json";
  save_report_csv(rows, csv);
  save_report_json(rows, json);
  validate_report_json(json);
  m.add(csv);
  m.add(json);
  m.extra()["rows"] = rows.size();
  m.write();

  bool all_ok = true;
  for (const SuiteRow& r : rows) {
    std::cout << r.policy << " t_start=" << r.t_start_days << " reward " << r.episode_reward
              << " mean_h " << r.metrics.mean_h << " q " << r.metrics.q << " [" << r.status
              << "]\n";
    all_ok = all_ok && r.status == "ok";
  }
  return all_ok ? 0 : 3;
}

}  // namespace
}  // namespace epiflow

int main(int argc, char** argv) {
  using namespace epiflow;
  CLI::App app{"epiflow: mobility-aware epidemic control"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::uint64_t seed_value = 0;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed_value, "global seed");
    sub->add_option("--out", flags.out_dir, "output directory");
  };

  std::string policy = "no-intervention";
  std::string checkpoint;
  int t_start = 0;
  std::int64_t steps = 0;
  std::string ablation;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic OD series");
  add_common(gen);

  CLI::App* sim = app.add_subcommand("simulate", "run one episode under a policy");
  add_common(sim);
  sim->add_option("--policy", policy,
                  "no-intervention, ep-fixed, ep-soft, ep-hard, ep-lockdown or agent");
  sim->add_option("--checkpoint", checkpoint, "agent checkpoint (with --policy agent)");
  CLI::Option* sim_start = sim->add_option("--t-start", t_start, "intervention start day")
                               ->check(CLI::NonNegativeNumber);

  CLI::App* train = app.add_subcommand("train", "train the DDPG agent");
  add_common(train);
  CLI::Option* steps_opt =
      train->add_option("--steps", steps, "training steps")->check(CLI::NonNegativeNumber);
  train->add_option("--ablation", ablation, "ablation variant")
      ->check(CLI::IsMember({"gnn-mean", "gnn-softmax", "no-expert", "no-thresholds"}));

  CLI::App* eval = app.add_subcommand("evaluate", "baseline table plus optional agent rows");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "agent checkpoint");
  CLI::Option* eval_start = eval->add_option("--t-start", t_start, "intervention start day")
                                ->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* active = app.get_subcommands().front();
    if (active->count("--seed") > 0) flags.seed = seed_value;
    RunConfig config = resolve_config(flags);
    config.validate();
    if (active == gen) return cmd_gen_data(config);
    if (active == sim) {
      std::optional<int> ts;
      if (sim_start->count() > 0) ts = t_start;
      return cmd_simulate(config, policy, checkpoint, ts);
    }
    if (active == train) {
      std::optional<std::int64_t> st;
      if (steps_opt->count() > 0) st = steps;
      return cmd_train(config, st, ablation);
    }
    std::optional<int> ts;
    if (eval_start->count() > 0) ts = t_start;
    return cmd_evaluate(config, checkpoint, ts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
