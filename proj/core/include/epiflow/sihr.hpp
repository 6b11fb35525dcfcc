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

#include <filesystem>
#include <vector>

#include "epiflow/types.hpp"

namespace epiflow {

// Per-region susceptible, infected (asymptomatic, mobile), hospitalized
// (immobile) and recovered counts. Continuous (fractional) persons.
struct EpidemicState {
  Vector S;
  Vector I;
  Vector H;
  Vector R;

  static EpidemicState Susceptible(const Vector& population);
  static EpidemicState Zero(Index num_regions);

  Index num_regions() const { return S.size(); }
  Vector total() const { return S + I + H + R; }
  // N^mov = S + I + R; hospitalized people do not travel.
  Vector movable() const { return S + I + R; }
  double city_total() const { return S.sum() + I.sum() + H.sum() + R.sum(); }
  // Throws StateError on shape mismatch, negative or non-finite entries.
  void validate() const;
};

struct DiseaseParams {
  double beta_s = 0.1 / 24.0;
  double beta_m = 3.0 / 24.0;
  double gamma = 0.3 / 24.0;
  double theta = 0.3 / 24.0;
  // Whether the hospitalized population of a region counts toward the
  // staying group's mixing denominator N^s.
  bool hospitalized_in_staying_denominator = true;

  void validate() const;
};

struct MobilityOutcome {
  EpidemicState stay;
  EpidemicState arrivals;
  EpidemicState mixed;
  // Set when some region's requested outflow exceeded its movable population
  // and was rescaled.
  bool clipped = false;
};

// Fraction of region i's movable population travelling to j. Rows whose
// total exceeds 1 are rescaled to 1; regions with no movable population
// contribute nothing.
struct TransportFractions {
  Matrix fractions;
  bool clipped = false;
};
TransportFractions transport_fractions(const Matrix& flows, const Vector& movable);

// Mobility sub-step: S, I, R leave proportionally to M_p / N^mov and arrive
// at destinations; H stays in place.
MobilityOutcome mobility_substep(const EpidemicState& state, const Matrix& allowed_flow);

struct InfectionBreakdown {
  Vector staying;
  Vector moving;
};

// Infection sub-step over the staying and arriving groups.
EpidemicState infection_substep(const EpidemicState& stay, const EpidemicState& arrivals,
                                const DiseaseParams& params,
                                InfectionBreakdown* breakdown = nullptr);

// One hour: mobility then infection.
EpidemicState step_hour(const EpidemicState& state, const Matrix& allowed_flow,
                        const DiseaseParams& params, bool* clipped = nullptr);

// R0 from the population-weighted mean transmission rate
// (p_move beta_m + (1 - p_move) beta_s) / gamma.
double estimate_r0(const DiseaseParams& params, double p_move);

// What the controller observes: S and I only jointly.
struct VisibleState {
  Vector SI;
  Vector H;
  Vector R;
};
using VisibleDelta = VisibleState;

VisibleState visible(const EpidemicState& state);
VisibleDelta visible_delta(const VisibleState& current, const VisibleState& previous);
VisibleDelta zero_delta(Index num_regions);

// Moves count persons from S to I in region. Throws StateError if count
// exceeds S[region] or is negative.
EpidemicState seed_infection(const EpidemicState& state, Index region, double count);

// Trajectory CSV "hour,region,S,I,H,R"; states[t] is the state at hour
// first_hour + t.
void save_trajectory_csv(const std::vector<EpidemicState>& states, int first_hour,
                         const std::filesystem::path& path);

}  // namespace epiflow
