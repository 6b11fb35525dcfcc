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
#include <filesystem>
#include <string>
#include <vector>

#include "epiflow/types.hpp"

namespace epiflow {

// Per-origin-destination quota rates, every entry in [0, 1].
class QuotaMatrix {
 public:
  QuotaMatrix() = default;
  // Throws InvalidParamsError if the matrix is not square or any entry
  // falls outside [0, 1] (NaN included).
  explicit QuotaMatrix(Matrix rates);

  static QuotaMatrix Filled(Index num_regions, double rate);
  // Row i set to row_rates[i]: region-level decisions on outgoing flow.
  static QuotaMatrix FromRowRates(const Vector& row_rates);

  Index num_regions() const { return rates_.rows(); }
  const Matrix& rates() const { return rates_; }
  double operator()(Index i, Index j) const { return rates_(i, j); }

 private:
  Matrix rates_;
};

// Hourly origin-destination demand M_d plus initial region populations.
//
// Hours are stored as references into a small set of distinct frames with a
// per-hour scale, so month-long series over hundreds of regions stay compact.
// A prolonged series tiles its base period; demand(hour) for hour >= horizon()
// wraps around periodically.
class MobilitySeries {
 public:
  struct HourRef {
    std::size_t frame = 0;
    double scale = 1.0;
  };

  MobilitySeries() = default;
  // Validates the MobilitySeries invariants (square non-negative frames with
  // zero diagonal, positive populations). Throws InvalidParamsError.
  MobilitySeries(std::vector<Matrix> frames, std::vector<HourRef> schedule,
                 Vector initial_population);

  // One frame per hour.
  static MobilitySeries FromHourly(std::vector<Matrix> hourly,
                                   Vector initial_population);

  Index num_regions() const { return population_.size(); }
  // Number of hours T.
  int horizon() const { return static_cast<int>(schedule_.size()) * repeats_; }
  // Length of the tiled base period in hours.
  int base_hours() const { return static_cast<int>(schedule_.size()); }
  int repeats() const { return repeats_; }

  Matrix demand(int hour) const;
  // Row sums of demand(hour) without materializing the matrix.
  Vector outflow(int hour) const;
  double scale(int hour) const { return ref(hour).scale; }
  const Matrix& frame(int hour) const { return frames_[ref(hour).frame]; }

  const Vector& initial_population() const { return population_; }
  const std::vector<Matrix>& frames() const { return frames_; }
  const std::vector<HourRef>& schedule() const { return schedule_; }

  // Series whose horizon is repeats * horizon(); demand tiled periodically.
  MobilitySeries prolonged(int repeats) const;

  // Value equality over every hour of the horizon.
  bool same_values(const MobilitySeries& other) const;

 private:
  const HourRef& ref(int hour) const;

  std::vector<Matrix> frames_;
  std::vector<Vector> frame_outflows_;
  std::vector<HourRef> schedule_;
  Vector population_;
  int repeats_ = 1;
};

// M_p = p (elementwise) M_d. Throws DimensionError on shape mismatch.
Matrix apply_quota(const Matrix& demand, const QuotaMatrix& quota);

MobilitySeries prolong(const MobilitySeries& series, int repeats);

struct MeanOutflow {
  double value = 0.0;
  // True when the region never has outgoing demand; value is then 0.
  bool zero_demand = false;
};

// (1/T) sum_tau sum_j M_d[i,j]^tau, averaged over the base period so that
// prolonging a series leaves it bit-identical.
MeanOutflow mean_outflow(const MobilitySeries& series, Index region);
std::vector<MeanOutflow> mean_outflows(const MobilitySeries& series);

struct CityGenParams {
  int grid_rows = 17;
  int grid_cols = 19;
  double mean_population = 1686.0;
  double p_move = 0.18;
  double commute_fraction = 0.25;
  std::uint64_t seed = 0;
  int days = 31;
  // Gravity kernel support radius in grid cells.
  double kernel_radius = 3.0;

  Index num_regions() const {
    return static_cast<Index>(grid_rows) * grid_cols;
  }
  void validate() const;
};

// Synthetic city: gravity-style kernel (pop_i pop_j / d^2) modulated by a
// 24-hour profile with morning commutes toward "work" regions and the
// reverse flow in the evening. Deterministic for a fixed seed.
MobilitySeries generate_synthetic_city(const CityGenParams& params);

// Mean over hours and regions of outflow_i / N_i^0.
double realized_move_probability(const MobilitySeries& series);

// OD CSV: header "hour,origin,destination,flow", zero flows omitted. The
// populations live in a companion "region,population" file.
void save_od_csv(const MobilitySeries& series,
                 const std::filesystem::path& od_path,
                 const std::filesystem::path& population_path);
MobilitySeries load_od_csv(const std::filesystem::path& od_path,
                           const std::filesystem::path& population_path);

// Companion population path used by the single-path overloads:
// "city.csv" -> "city.population.csv".
std::filesystem::path population_path_for(const std::filesystem::path& od_path);
void save_od_csv(const MobilitySeries& series,
                 const std::filesystem::path& od_path);
MobilitySeries load_od_csv(const std::filesystem::path& od_path);

}  // namespace epiflow
