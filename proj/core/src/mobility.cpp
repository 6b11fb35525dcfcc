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
#include "epiflow/mobility.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

#include "epiflow/errors.hpp"

namespace epiflow {

QuotaMatrix::QuotaMatrix(Matrix rates) : rates_(std::move(rates)) {
  if (rates_.rows() != rates_.cols()) {
    throw InvalidParamsError("quota matrix must be square");
  }
  for (Index i = 0; i < rates_.size(); ++i) {
    const double v = rates_.data()[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidParamsError("quota rate outside [0, 1]: " +
                               std::to_string(v));
    }
  }
}

QuotaMatrix QuotaMatrix::Filled(Index num_regions, double rate) {
  return QuotaMatrix(Matrix::Constant(num_regions, num_regions, rate));
}

QuotaMatrix QuotaMatrix::FromRowRates(const Vector& row_rates) {
  const Index k = row_rates.size();
  return QuotaMatrix(row_rates * Eigen::RowVectorXd::Ones(k));
}

MobilitySeries::MobilitySeries(std::vector<Matrix> frames,
                               std::vector<HourRef> schedule,
                               Vector initial_population)
    : frames_(std::move(frames)),
      schedule_(std::move(schedule)),
      population_(std::move(initial_population)) {
  const Index k = population_.size();
  if (k < 1) throw InvalidParamsError("mobility series needs regions");
  if (schedule_.empty()) throw InvalidParamsError("mobility series is empty");
  for (Index i = 0; i < k; ++i) {
    if (!(population_[i] > 0.0) || !std::isfinite(population_[i])) {
      throw InvalidParamsError("region population must be positive");
    }
  }
  frame_outflows_.reserve(frames_.size());
  for (const Matrix& f : frames_) {
    if (f.rows() != k || f.cols() != k) {
      throw InvalidParamsError("demand frame shape does not match K");
    }
    for (Index i = 0; i < f.size(); ++i) {
      const double v = f.data()[i];
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InvalidParamsError("demand entries must be finite and >= 0");
      }
    }
    for (Index i = 0; i < k; ++i) {
      if (f(i, i) != 0.0) {
        throw InvalidParamsError("demand diagonal must be zero");
      }
    }
    frame_outflows_.push_back(f.rowwise().sum());
  }
  for (const HourRef& r : schedule_) {
    if (r.frame >= frames_.size()) {
      throw InvalidParamsError("schedule references a missing frame");
    }
    if (!(r.scale >= 0.0) || !std::isfinite(r.scale)) {
      throw InvalidParamsError("schedule scale must be finite and >= 0");
    }
  }
}

MobilitySeries MobilitySeries::FromHourly(std::vector<Matrix> hourly,
                                          Vector initial_population) {
  std::vector<HourRef> schedule(hourly.size());
  for (std::size_t h = 0; h < hourly.size(); ++h) schedule[h] = {h, 1.0};
  return MobilitySeries(std::move(hourly), std::move(schedule),
                        std::move(initial_population));
}

const MobilitySeries::HourRef& MobilitySeries::ref(int hour) const {
  if (hour < 0) throw InvalidParamsError("negative hour");
  return schedule_[static_cast<std::size_t>(hour) % schedule_.size()];
}

Matrix MobilitySeries::demand(int hour) const {
  const HourRef& r = ref(hour);
  if (r.scale == 1.0) return frames_[r.frame];
  return r.scale * frames_[r.frame];
}

Vector MobilitySeries::outflow(int hour) const {
  const HourRef& r = ref(hour);
  if (r.scale == 1.0) return frame_outflows_[r.frame];
  // Summed from the scaled entries so it matches demand(hour).rowwise().sum().
  return (r.scale * frames_[r.frame]).rowwise().sum();
}

MobilitySeries MobilitySeries::prolonged(int repeats) const {
  if (repeats < 1) throw InvalidParamsError("repeats must be >= 1");
  MobilitySeries out = *this;
  out.repeats_ = repeats_ * repeats;
  return out;
}

bool MobilitySeries::same_values(const MobilitySeries& other) const {
  if (num_regions() != other.num_regions() || horizon() != other.horizon()) {
    return false;
  }
  if (population_ != other.population_) return false;
  for (int h = 0; h < horizon(); ++h) {
    if (demand(h) != other.demand(h)) return false;
  }
  return true;
}

Matrix apply_quota(const Matrix& demand, const QuotaMatrix& quota) {
  if (demand.rows() != quota.rates().rows() ||
      demand.cols() != quota.rates().cols()) {
    throw DimensionError("quota shape " + std::to_string(quota.rates().rows()) +
                         "x" + std::to_string(quota.rates().cols()) +
                         " does not match demand " +
                         std::to_string(demand.rows()) + "x" +
                         std::to_string(demand.cols()));
  }
  return demand.cwiseProduct(quota.rates());
}

MobilitySeries prolong(const MobilitySeries& series, int repeats) {
  return series.prolonged(repeats);
}

MeanOutflow mean_outflow(const MobilitySeries& series, Index region) {
  if (region < 0 || region >= series.num_regions()) {
    throw InvalidParamsError("region index out of range");
  }
  const int base = series.base_hours();
  double total = 0.0;
  for (int h = 0; h < base; ++h) total += series.outflow(h)[region];
  MeanOutflow out;
  out.value = total / base;
  out.zero_demand = !(out.value > 0.0);
  if (out.zero_demand) out.value = 0.0;
  return out;
}

std::vector<MeanOutflow> mean_outflows(const MobilitySeries& series) {
  const Index k = series.num_regions();
  const int base = series.base_hours();
  Vector total = Vector::Zero(k);
  for (int h = 0; h < base; ++h) total += series.outflow(h);
  std::vector<MeanOutflow> out(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    // Elementwise accumulation in hour order matches mean_outflow() exactly.
    out[i].value = total[i] / base;
    out[i].zero_demand = !(out[i].value > 0.0);
    if (out[i].zero_demand) out[i].value = 0.0;
  }
  return out;
}

void CityGenParams::validate() const {
  if (grid_rows < 1 || grid_cols < 1 || num_regions() < 2) {
    throw InvalidParamsError("synthetic city needs at least 2 regions");
  }
  if (!(mean_population > 0.0)) {
    throw InvalidParamsError("mean_population must be positive");
  }
  if (!(p_move > 0.0 && p_move < 1.0)) {
    throw InvalidParamsError("p_move must lie in (0, 1)");
  }
  if (!(commute_fraction >= 0.0 && commute_fraction <= 1.0)) {
    throw InvalidParamsError("commute_fraction must lie in [0, 1]");
  }
  if (days < 1) throw InvalidParamsError("days must be >= 1");
  if (!(kernel_radius >= 1.0)) {
    throw InvalidParamsError("kernel_radius must be >= 1");
  }
}

namespace {

// Relative hourly weights of background (non-commute) trips.
constexpr std::array<double, 24> kBackgroundProfile = {
    0.20, 0.15, 0.12, 0.12, 0.15, 0.30, 0.60, 0.90, 1.00, 1.00, 1.00, 1.05,
    1.10, 1.05, 1.00, 1.00, 1.05, 1.10, 1.05, 0.95, 0.80, 0.60, 0.45, 0.30};
// Commute weights toward work (morning) and back home (evening); equal
// totals keep daily populations balanced.
constexpr std::array<double, 24> kMorningProfile = {
    0, 0, 0, 0, 0, 0.10, 0.20, 0.25, 0.25, 0.15, 0.05, 0,
    0, 0, 0, 0, 0,    0,    0,    0,    0,    0,    0, 0};
constexpr std::array<double, 24> kEveningProfile = {
    0, 0, 0, 0, 0, 0, 0, 0, 0,    0,    0,    0,
    0, 0, 0, 0, 0.10, 0.20, 0.25, 0.25, 0.15, 0.05, 0, 0};
constexpr double kWeekendBackground = 0.85;
constexpr double kWeekendCommute = 0.25;
constexpr double kWorkAttraction = 4.0;
constexpr double kWorkRegionShare = 0.2;
constexpr double kMaxHourlyOutflowShare = 0.95;
constexpr int kSinkhornIterations = 200;

double profile_sum(const std::array<double, 24>& p) {
  return std::accumulate(p.begin(), p.end(), 0.0);
}

}  // namespace

MobilitySeries generate_synthetic_city(const CityGenParams& params) {
  params.validate();
  const Index k = params.num_regions();
  std::mt19937_64 rng(params.seed);

  std::lognormal_distribution<double> pop_dist(0.0, 0.5);
  Vector pop(k);
  for (Index i = 0; i < k; ++i) pop[i] = pop_dist(rng);
  pop = pop.cwiseMax(0.2 * pop.mean());
  pop *= params.mean_population / pop.mean();

  std::bernoulli_distribution work_draw(kWorkRegionShare);
  std::vector<bool> is_work(static_cast<std::size_t>(k));
  bool any_work = false;
  for (Index i = 0; i < k; ++i) {
    is_work[i] = work_draw(rng);
    any_work = any_work || is_work[i];
  }
  if (!any_work) {
    std::uniform_int_distribution<Index> pick(0, k - 1);
    is_work[pick(rng)] = true;
  }

  const auto row_of = [&](Index i) { return static_cast<double>(i / params.grid_cols); };
  const auto col_of = [&](Index i) { return static_cast<double>(i % params.grid_cols); };
  Matrix kernel = Matrix::Zero(k, k);
  Matrix commute = Matrix::Zero(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      if (i == j) continue;
      const double dr = row_of(i) - row_of(j);
      const double dc = col_of(i) - col_of(j);
      const double d2 = dr * dr + dc * dc;
      if (d2 > params.kernel_radius * params.kernel_radius) continue;
      kernel(i, j) = pop[i] * pop[j] / d2;
      commute(i, j) = pop[j] * (is_work[j] ? kWorkAttraction : 1.0) / d2;
    }
  }
  // Symmetric scaling D K D with row sums equal to the populations: every
  // region sends the same share of its residents and flows balance pairwise.
  Vector d = Vector::Ones(k);
  for (int it = 0; it < kSinkhornIterations; ++it) {
    const Vector kd = kernel * d;
    for (Index i = 0; i < k; ++i) {
      if (kd[i] > 0.0) d[i] = std::sqrt(d[i] * pop[i] / kd[i]);
    }
  }
  const Matrix gravity = d.asDiagonal() * kernel * d.asDiagonal();
  // Commuters leave in proportion to their population; work regions send fewer.
  for (Index i = 0; i < k; ++i) {
    const double row = commute.row(i).sum();
    if (row > 0.0) commute.row(i) *= pop[i] * (is_work[i] ? 0.25 : 1.0) / row;
  }
  const Matrix commute_back = commute.transpose();

  const double cf = params.commute_fraction;
  const double bg_total = profile_sum(kBackgroundProfile);
  const double morning_total = profile_sum(kMorningProfile);
  const double evening_total = profile_sum(kEveningProfile);
  std::vector<Matrix> frames;
  frames.reserve(48);
  for (int weekend = 0; weekend < 2; ++weekend) {
    const double bg_mult = weekend ? kWeekendBackground : 1.0;
    const double cm_mult = weekend ? kWeekendCommute : 1.0;
    for (int h = 0; h < 24; ++h) {
      Matrix f = (bg_mult * (1.0 - cf) * kBackgroundProfile[h] / bg_total) *
                 gravity;
      if (kMorningProfile[h] > 0.0) {
        f += (cm_mult * 0.5 * cf * kMorningProfile[h] / morning_total) *
             commute;
      }
      if (kEveningProfile[h] > 0.0) {
        f += (cm_mult * 0.5 * cf * kEveningProfile[h] / evening_total) *
             commute_back;
      }
      frames.push_back(std::move(f));
    }
  }

  std::vector<MobilitySeries::HourRef> schedule;
  schedule.reserve(static_cast<std::size_t>(params.days) * 24);
  for (int day = 0; day < params.days; ++day) {
    const bool weekend = (day % 7) >= 5;
    for (int h = 0; h < 24; ++h) {
      schedule.push_back({static_cast<std::size_t>((weekend ? 24 : 0) + h), 1.0});
    }
  }

  // Scale so that the mean hourly move probability equals p_move.
  const Vector inv_pop = pop.cwiseInverse();
  double prob_sum = 0.0;
  for (const auto& r : schedule) {
    prob_sum += frames[r.frame].rowwise().sum().cwiseProduct(inv_pop).mean();
  }
  const double realized = prob_sum / static_cast<double>(schedule.size());
  for (Matrix& f : frames) f *= params.p_move / realized;

  // Feasibility along the population trajectory of the first week.
  Vector n = pop;
  const std::size_t check_hours = std::min<std::size_t>(schedule.size(), 24 * 7);
  for (std::size_t t = 0; t < check_hours; ++t) {
    const Matrix& f = frames[schedule[t].frame];
    const Vector out = f.rowwise().sum();
    for (Index i = 0; i < k; ++i) {
      if (out[i] > kMaxHourlyOutflowShare * n[i]) {
        throw InvalidParamsError(
            "p_move too high for the commute profile: hourly outflow exceeds "
            "the resident population");
      }
    }
    n += f.colwise().sum().transpose() - out;
  }

  return MobilitySeries(std::move(frames), std::move(schedule), std::move(pop));
}

double realized_move_probability(const MobilitySeries& series) {
  const Vector inv_pop = series.initial_population().cwiseInverse();
  double sum = 0.0;
  const int base = series.base_hours();
  for (int h = 0; h < base; ++h) {
    sum += series.outflow(h).cwiseProduct(inv_pop).mean();
  }
  return sum / base;
}

}  // namespace epiflow
