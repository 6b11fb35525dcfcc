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
#include "epiflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "epiflow/errors.hpp"
#include "json.hpp"

namespace epiflow {

using nlohmann::json;

MetricsReport compute_metrics(const EpisodeLog& log) {
  if (log.num_regions <= 0) throw StateError("episode log has no regions");
  const double k = static_cast<double>(log.num_regions);
  MetricsReport m;
  double h_sum = 0.0;
  double demand = 0.0;
  double allowed = 0.0;
  int hours = 0;
  for (const HourRecord& h : log.hours) {
    if (!h.intervened) continue;
    h_sum += h.H / k;
    m.max_h = std::max(m.max_h, h.H / k);
    demand += h.demand;
    allowed += h.allowed;
    ++hours;
  }
  if (hours == 0) throw StateError("episode log has no intervened hours");
  if (!(demand > 0.0)) throw InvalidParamsError("q is undefined: no demand in the intervened period");
  m.mean_h = h_sum / hours;
  m.q = allowed / demand;
  m.total_r = log.final_state.R.size() > 0 ? log.final_state.R.sum() / k : 0.0;

  const std::size_t first_day = static_cast<std::size_t>(log.t_start_hour / 24);
  std::vector<int> region_days(static_cast<std::size_t>(log.num_regions), 0);
  for (std::size_t d = first_day; d < log.day_demand.size(); ++d) {
    const Vector& dem = log.day_demand[d];
    const Vector& all = log.day_allowed[d];
    if (dem.sum() > 0.0 && all.sum() / dem.sum() < kStringentRatio) ++m.t20_city;
    for (Index i = 0; i < log.num_regions; ++i) {
      if (dem[i] > 0.0 && all[i] / dem[i] < kStringentRatio) ++region_days[static_cast<std::size_t>(i)];
    }
  }
  m.t20_region = *std::max_element(region_days.begin(), region_days.end());
  return m;
}

EpisodeLog run_episode(ControlEnv& env, Policy& policy, const InitSpec& init) {
  Observation obs = env.reset(init);
  policy.reset();
  while (!env.done()) obs = env.step(policy.act(obs)).observation;
  return env.log();
}

std::vector<std::string> default_baselines() {
  return {"no-intervention", "ep-fixed", "ep-soft", "ep-hard", "ep-lockdown"};
}

SuiteRow evaluate_policy(std::shared_ptr<const MobilitySeries> series,
                         const DiseaseParams& disease, const EnvConfig& env, Policy& policy,
                         const InitSpec& init) {
  SuiteRow row;
  row.policy = policy.name();
  row.t_start_days = env.t_start_days;
  try {
    ControlEnv e(std::move(series), disease, env);
    const EpisodeLog log = run_episode(e, policy, init);
    row.metrics = compute_metrics(log);
    row.episode_reward = log.total_reward;
    row.termination_reason = to_string(log.reason);
  } catch (const std::exception& ex) {
    row.status = std::string("failed: ") + ex.what();
  }
  return row;
}

std::vector<SuiteRow> run_baseline_suite(std::shared_ptr<const MobilitySeries> series,
                                         const DiseaseParams& disease, const EnvConfig& env,
                                         const ExpertParams& experts,
                                         const std::vector<std::string>& policies,
                                         const std::vector<double>& fixed_rates,
                                         const InitSpec& init) {
  std::vector<SuiteRow> rows;
  for (const std::string& name : policies) {
    std::vector<ExpertParams> variants;
    if (name == "ep-fixed") {
      for (const double x : fixed_rates) {
        ExpertParams p = experts;
        p.x_q = x;
        variants.push_back(p);
      }
    } else {
      variants.push_back(experts);
    }
    for (const ExpertParams& p : variants) {
      std::unique_ptr<Policy> policy;
      try {
        policy = make_expert_policy(name, p);
      } catch (const std::exception& ex) {
        SuiteRow row;
        row.policy = name;
        row.t_start_days = env.t_start_days;
        row.status = std::string("failed: ") + ex.what();
        rows.push_back(std::move(row));
        continue;
      }
      rows.push_back(evaluate_policy(series, disease, env, *policy, init));
    }
  }
  return rows;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {
      "policy", "t_start", "mean_h", "max_h", "total_r", "q",
      "t20_city", "t20_region", "status", "episode_reward"};
  return columns;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void save_report_csv(const std::vector<SuiteRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out.precision(17);
  const auto& cols = report_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const SuiteRow& r : rows) {
    out << csv_field(r.policy) << ',' << r.t_start_days << ',' << r.metrics.mean_h << ','
        << r.metrics.max_h << ',' << r.metrics.total_r << ',' << r.metrics.q << ','
        << r.metrics.t20_city << ',' << r.metrics.t20_region << ',' << csv_field(r.status)
        << ',' << r.episode_reward << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

void save_report_json(const std::vector<SuiteRow>& rows, const std::filesystem::path& path) {
  json doc;
  doc["columns"] = report_columns();
  json arr = json::array();
  for (const SuiteRow& r : rows) {
    arr.push_back(json{{"policy", r.policy},
                       {"t_start", r.t_start_days},
                       {"mean_h", r.metrics.mean_h},
                       {"max_h", r.metrics.max_h},
                       {"total_r", r.metrics.total_r},
                       {"q", r.metrics.q},
                       {"t20_city", r.metrics.t20_city},
                       {"t20_region", r.metrics.t20_region},
                       {"status", r.status},
                       {"episode_reward", r.episode_reward}});
  }
  doc["rows"] = std::move(arr);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

void validate_report_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what(), 0);
  }
  const auto fail = [](const std::string& why) { throw ParseError("report schema: " + why, 0); };
  if (!doc.is_object() || !doc.contains("columns") || !doc.contains("rows")) {
    fail("expected an object with 'columns' and 'rows'");
  }
  if (doc["columns"] != json(report_columns())) fail("unexpected column list");
  if (!doc["rows"].is_array()) fail("'rows' must be an array");
  for (const json& row : doc["rows"]) {
    if (!row.is_object() || row.size() != report_columns().size()) fail("row has wrong key set");
    for (const std::string& c : report_columns()) {
      if (!row.contains(c)) fail("row lacks '" + c + "'");
    }
    if (!row["policy"].is_string() || !row["status"].is_string()) fail("policy/status must be strings");
    for (const char* key : {"t_start", "t20_city", "t20_region"}) {
      if (!row[key].is_number_integer() || row[key].get<long>() < 0) {
        fail(std::string(key) + " must be a non-negative integer");
      }
    }
    for (const char* key : {"mean_h", "max_h", "total_r", "q", "episode_reward"}) {
      if (!row[key].is_number()) fail(std::string(key) + " must be a number");
    }
    const double q = row["q"].get<double>();
    if (row["status"] == "ok" && !(q >= 0.0 && q <= 1.0)) fail("q outside [0, 1]");
  }
}

void export_figure_data(const EpisodeLog& log, const std::filesystem::path& dir,
                        const std::string& prefix) {
  std::filesystem::create_directories(dir);
  const double k = static_cast<double>(std::max<Index>(1, log.num_regions));
  const auto open = [&](const std::string& name) {
    std::ofstream out(dir / (prefix + name), std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + (dir / (prefix + name)).string());
    out.precision(17);
    return out;
  };
  {
    std::ofstream out = open("h_curve.csv");
    out << "hour,intervened,mean_h,mean_i,mean_r\n";
    for (const HourRecord& h : log.hours) {
      out << h.hour << ',' << (h.intervened ? 1 : 0) << ',' << h.H / k << ',' << h.I / k << ','
          << h.R / k << '\n';
    }
  }
  constexpr int kBins = 10;
  std::vector<long> counts(kBins, 0);
  {
    std::ofstream out = open("quota_grid.csv");
    out << "step,hour,region,quota_rate\n";
    for (const StepRecord& s : log.steps) {
      for (Index i = 0; i < s.quota_rate.size(); ++i) {
        const double q = s.quota_rate[i];
        out << s.step << ',' << s.hour << ',' << i << ',';
        if (std::isnan(q)) {
          out << "nan\n";
          continue;
        }
        out << q << '\n';
        const int bin = std::clamp(static_cast<int>(q * kBins), 0, kBins - 1);
        ++counts[static_cast<std::size_t>(bin)];
      }
    }
  }
  {
    std::ofstream out = open("quota_histogram.csv");
    out << "bin_lower,bin_upper,count\n";
    for (int b = 0; b < kBins; ++b) {
      out << static_cast<double>(b) / kBins << ',' << static_cast<double>(b + 1) / kBins << ','
          << counts[static_cast<std::size_t>(b)] << '\n';
    }
  }
}

}  // namespace epiflow
