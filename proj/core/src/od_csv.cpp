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
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "epiflow/errors.hpp"
#include "epiflow/mobility.hpp"

namespace epiflow {
namespace {

constexpr std::string_view kOdHeader = "hour,origin,destination,flow";
constexpr std::string_view kPopulationHeader = "region,population";

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

long long parse_int(std::string_view field, const char* what, std::size_t line) {
  field = trim(field);
  long long v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(std::string("invalid ") + what + " '" + std::string(field) + "'", line);
  }
  return v;
}

double parse_double(std::string_view field, const char* what, std::size_t line) {
  field = trim(field);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() ||
      !std::isfinite(v)) {
    throw ParseError(std::string("invalid ") + what + " '" + std::string(field) + "'", line);
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

Vector load_population(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<double> pop;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!header_seen) {
      if (view != kPopulationHeader) {
        throw ParseError("expected header '" + std::string(kPopulationHeader) + "'", line_no);
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(view);
    if (fields.size() != 2) throw ParseError("expected 2 fields", line_no);
    const long long region = parse_int(fields[0], "region", line_no);
    const double value = parse_double(fields[1], "population", line_no);
    if (region != static_cast<long long>(pop.size())) {
      throw ParseError("regions must be listed in order 0..K-1", line_no);
    }
    if (!(value > 0.0)) throw ParseError("population must be positive", line_no);
    pop.push_back(value);
  }
  if (pop.empty()) throw ParseError("no records in " + path.string(), 0);
  return Eigen::Map<const Vector>(pop.data(), static_cast<Index>(pop.size()));
}

struct OdRecord {
  int hour;
  int origin;
  int destination;
  double flow;
};

}  // namespace

std::filesystem::path population_path_for(const std::filesystem::path& od_path) {
  std::filesystem::path p = od_path;
  p.replace_extension(".population.csv");
  return p;
}

void save_od_csv(const MobilitySeries& series, const std::filesystem::path& od_path,
                 const std::filesystem::path& population_path) {
  {
    std::ofstream out = open_out(population_path);
    out << kPopulationHeader << '\n';
    const Vector& pop = series.initial_population();
    for (Index i = 0; i < pop.size(); ++i) {
      out << i << ',' << format_double(pop[i]) << '\n';
    }
    if (!out) throw Error("failed writing " + population_path.string());
  }
  std::ofstream out = open_out(od_path);
  out << kOdHeader << '\n';
  const Index k = series.num_regions();
  const int horizon = series.horizon();
  std::string buf;
  for (int h = 0; h < horizon; ++h) {
    const Matrix m = series.demand(h);
    bool wrote = false;
    buf.clear();
    for (Index i = 0; i < k; ++i) {
      for (Index j = 0; j < k; ++j) {
        const double v = m(i, j);
        if (v == 0.0) continue;
        buf += std::to_string(h);
        buf += ',';
        buf += std::to_string(i);
        buf += ',';
        buf += std::to_string(j);
        buf += ',';
        buf += format_double(v);
        buf += '\n';
        wrote = true;
      }
    }
    // An explicit zero row pins the horizon when the final hour is empty.
    if (!wrote && h == horizon - 1) {
      buf += std::to_string(h) + ",0,1,0\n";
    }
    out << buf;
  }
  if (!out) throw Error("failed writing " + od_path.string());
}

MobilitySeries load_od_csv(const std::filesystem::path& od_path,
                           const std::filesystem::path& population_path) {
  const Vector pop = load_population(population_path);
  const Index k = pop.size();

  std::ifstream in = open_in(od_path);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<OdRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!header_seen) {
      if (view != kOdHeader) {
        throw ParseError("expected header '" + std::string(kOdHeader) + "'", line_no);
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(view);
    if (fields.size() != 4) throw ParseError("expected 4 fields", line_no);
    const long long hour = parse_int(fields[0], "hour", line_no);
    const long long origin = parse_int(fields[1], "origin", line_no);
    const long long dest = parse_int(fields[2], "destination", line_no);
    const double flow = parse_double(fields[3], "flow", line_no);
    if (hour < 0 || hour > 10'000'000) throw ParseError("hour out of range", line_no);
    if (origin < 0 || origin >= k || dest < 0 || dest >= k) {
      throw ParseError("region index inconsistent with K=" + std::to_string(k), line_no);
    }
    if (flow < 0.0) throw ParseError("negative flow " + std::string(trim(fields[3])), line_no);
    if (origin == dest && flow != 0.0) {
      throw ParseError("intra-region flow is not allowed", line_no);
    }
    records.push_back({static_cast<int>(hour), static_cast<int>(origin),
                       static_cast<int>(dest), flow});
  }
  if (records.empty()) throw ParseError("no records in " + od_path.string(), 0);

  std::stable_sort(records.begin(), records.end(),
                   [](const OdRecord& a, const OdRecord& b) { return a.hour < b.hour; });
  const int horizon = records.back().hour + 1;

  // Identical hours share one frame.
  std::vector<Matrix> frames;
  std::unordered_multimap<std::size_t, std::size_t> by_hash;
  std::vector<MobilitySeries::HourRef> schedule(static_cast<std::size_t>(horizon));
  std::size_t pos = 0;
  for (int h = 0; h < horizon; ++h) {
    Matrix m = Matrix::Zero(k, k);
    std::size_t hash = 0;
    while (pos < records.size() && records[pos].hour == h) {
      const OdRecord& r = records[pos++];
      m(r.origin, r.destination) = r.flow;
    }
    for (Index idx = 0; idx < m.size(); ++idx) {
      const double v = m.data()[idx];
      if (v != 0.0) {
        hash ^= std::hash<double>{}(v) + 0x9e3779b97f4a7c15ULL + (hash << 6) + (hash >> 2) +
                static_cast<std::size_t>(idx);
      }
    }
    std::size_t frame = frames.size();
    const auto range = by_hash.equal_range(hash);
    for (auto it = range.first; it != range.second; ++it) {
      if (frames[it->second] == m) {
        frame = it->second;
        break;
      }
    }
    if (frame == frames.size()) {
      frames.push_back(std::move(m));
      by_hash.emplace(hash, frame);
    }
    schedule[static_cast<std::size_t>(h)] = {frame, 1.0};
  }
  return MobilitySeries(std::move(frames), std::move(schedule), pop);
}

void save_od_csv(const MobilitySeries& series, const std::filesystem::path& od_path) {
  save_od_csv(series, od_path, population_path_for(od_path));
}

MobilitySeries load_od_csv(const std::filesystem::path& od_path) {
  return load_od_csv(od_path, population_path_for(od_path));
}

}  // namespace epiflow
