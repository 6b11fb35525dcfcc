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
#include "epiflow/nn/checkpoint.hpp"

#include <fstream>

#include "epiflow/errors.hpp"
#include "json.hpp"

namespace epiflow::nn {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "epiflow-checkpoint";

json matrix_to_json(const std::string& name, const Matrix& m) {
  json data = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return json{{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

NamedMatrix matrix_from_json(const json& j) {
  NamedMatrix out;
  out.name = j.at("name").get<std::string>();
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ParseError("checkpoint matrix '" + out.name + "' has inconsistent shape", 0);
  }
  out.value.resize(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) out.value(r, c) = data[k++].get<double>();
  }
  return out;
}

}  // namespace

std::vector<NamedMatrix> snapshot(const std::vector<Parameter*>& params) {
  std::vector<NamedMatrix> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back({p->name, p->value});
  return out;
}

void restore(const std::vector<NamedMatrix>& saved, const std::vector<Parameter*>& params) {
  if (saved.size() != params.size()) {
    throw DimensionError("checkpoint has " + std::to_string(saved.size()) +
                         " tensors, network expects " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    const NamedMatrix& s = saved[k];
    if (s.name != p.name || s.value.rows() != p.value.rows() || s.value.cols() != p.value.cols()) {
      throw DimensionError("checkpoint tensor '" + s.name + "' does not match '" + p.name + "'");
    }
    p.value = s.value;
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  json root;
  root["format"] = kFormat;
  root["version"] = Checkpoint::kVersion;
  root["step"] = checkpoint.step;
  json nets = json::object();
  for (const auto& [name, tensors] : checkpoint.networks) {
    json arr = json::array();
    for (const NamedMatrix& t : tensors) arr.push_back(matrix_to_json(t.name, t.value));
    nets[name] = std::move(arr);
  }
  root["networks"] = std::move(nets);
  json opts = json::object();
  for (const auto& [name, st] : checkpoint.optimizers) {
    json o;
    o["learning_rate"] = st.config.learning_rate;
    o["beta1"] = st.config.beta1;
    o["beta2"] = st.config.beta2;
    o["epsilon"] = st.config.epsilon;
    o["step"] = st.step;
    json m = json::array();
    json v = json::array();
    for (std::size_t k = 0; k < st.first_moment.size(); ++k) {
      m.push_back(matrix_to_json("m" + std::to_string(k), st.first_moment[k]));
      v.push_back(matrix_to_json("v" + std::to_string(k), st.second_moment[k]));
    }
    o["first_moment"] = std::move(m);
    o["second_moment"] = std::move(v);
    opts[name] = std::move(o);
  }
  root["optimizers"] = std::move(opts);
  root["scalars"] = checkpoint.scalars;
  root["config"] = json::parse(checkpoint.config_json);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << root.dump(1) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what(), 0);
  }
  try {
    if (root.at("format").get<std::string>() != kFormat) {
      throw ParseError("not an epiflow checkpoint", 0);
    }
    const int version = root.at("version").get<int>();
    if (version != Checkpoint::kVersion) {
      throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
    }
    Checkpoint c;
    c.step = root.at("step").get<std::int64_t>();
    for (const auto& [name, arr] : root.at("networks").items()) {
      std::vector<NamedMatrix> tensors;
      for (const json& t : arr) tensors.push_back(matrix_from_json(t));
      c.networks[name] = std::move(tensors);
    }
    for (const auto& [name, o] : root.at("optimizers").items()) {
      AdamState st;
      st.config.learning_rate = o.at("learning_rate").get<double>();
      st.config.beta1 = o.at("beta1").get<double>();
      st.config.beta2 = o.at("beta2").get<double>();
      st.config.epsilon = o.at("epsilon").get<double>();
      st.step = o.at("step").get<std::int64_t>();
      for (const json& t : o.at("first_moment")) st.first_moment.push_back(matrix_from_json(t).value);
      for (const json& t : o.at("second_moment")) {
        st.second_moment.push_back(matrix_from_json(t).value);
      }
      c.optimizers[name] = std::move(st);
    }
    c.scalars = root.at("scalars").get<std::map<std::string, double>>();
    c.config_json = root.at("config").dump();
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
  }
}

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  if (a.step != b.step || a.scalars != b.scalars ||
      nlohmann::json::parse(a.config_json) != nlohmann::json::parse(b.config_json)) {
    return false;
  }
  if (a.networks.size() != b.networks.size()) return false;
  for (const auto& [name, tensors] : a.networks) {
    const auto it = b.networks.find(name);
    if (it == b.networks.end() || it->second.size() != tensors.size()) return false;
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      if (tensors[k].name != it->second[k].name) return false;
      const Matrix& x = tensors[k].value;
      const Matrix& y = it->second[k].value;
      if (x.rows() != y.rows() || x.cols() != y.cols() || x != y) return false;
    }
  }
  if (a.optimizers.size() != b.optimizers.size()) return false;
  for (const auto& [name, st] : a.optimizers) {
    const auto it = b.optimizers.find(name);
    if (it == b.optimizers.end()) return false;
    const AdamState& o = it->second;
    if (st.step != o.step || st.config.learning_rate != o.config.learning_rate ||
        st.config.beta1 != o.config.beta1 || st.config.beta2 != o.config.beta2 ||
        st.config.epsilon != o.config.epsilon || st.first_moment.size() != o.first_moment.size() ||
        st.second_moment.size() != o.second_moment.size()) {
      return false;
    }
    for (std::size_t k = 0; k < st.first_moment.size(); ++k) {
      if (st.first_moment[k] != o.first_moment[k] || st.second_moment[k] != o.second_moment[k]) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace epiflow::nn
