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
#include "epiflow/sihr.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "epiflow/errors.hpp"

namespace epiflow {

EpidemicState EpidemicState::Susceptible(const Vector& population) {
  const Index k = population.size();
  return {population, Vector::Zero(k), Vector::Zero(k), Vector::Zero(k)};
}

EpidemicState EpidemicState::Zero(Index num_regions) {
  return {Vector::Zero(num_regions), Vector::Zero(num_regions),
          Vector::Zero(num_regions), Vector::Zero(num_regions)};
}

void EpidemicState::validate() const {
  const Index k = S.size();
  if (I.size() != k || H.size() != k || R.size() != k) {
    throw StateError("compartment vectors differ in length");
  }
  for (const Vector* v : {&S, &I, &H, &R}) {
    for (Index i = 0; i < k; ++i) {
      if (!((*v)[i] >= 0.0) || !std::isfinite((*v)[i])) {
        throw StateError("compartment entry negative or non-finite in region " +
                         std::to_string(i));
      }
    }
  }
}

void DiseaseParams::validate() const {
  for (const double v : {beta_s, beta_m, gamma, theta}) {
    if (!(v >= 0.0 && v < 1.0)) {
      throw InvalidParamsError("disease rates must lie in [0, 1)");
    }
  }
}

TransportFractions transport_fractions(const Matrix& flows, const Vector& movable) {
  const Index k = movable.size();
  if (flows.rows() != k || flows.cols() != k) {
    throw DimensionError("flow matrix does not match region count");
  }
  TransportFractions out{Matrix::Zero(k, k), false};
  for (Index i = 0; i < k; ++i) {
    const double n = movable[i];
    if (!(n > 0.0)) continue;
    double row_sum = 0.0;
    for (Index j = 0; j < k; ++j) {
      out.fractions(i, j) = flows(i, j) / n;
      row_sum += out.fractions(i, j);
    }
    if (row_sum > 1.0) {
      out.fractions.row(i) /= row_sum;
      out.clipped = true;
    }
  }
  return out;
}

MobilityOutcome mobility_substep(const EpidemicState& state, const Matrix& allowed_flow) {
  const TransportFractions tf = transport_fractions(allowed_flow, state.movable());
  const Matrix& f = tf.fractions;
  const Vector keep = (Vector::Ones(state.num_regions()) - f.rowwise().sum()).cwiseMax(0.0);
  const Matrix ft = f.transpose();

  MobilityOutcome out;
  out.clipped = tf.clipped;
  out.stay.S = state.S.cwiseProduct(keep);
  out.stay.I = state.I.cwiseProduct(keep);
  out.stay.R = state.R.cwiseProduct(keep);
  out.stay.H = state.H;
  out.arrivals.S = ft * state.S;
  out.arrivals.I = ft * state.I;
  out.arrivals.R = ft * state.R;
  out.arrivals.H = Vector::Zero(state.num_regions());
  out.mixed.S = out.stay.S + out.arrivals.S;
  out.mixed.I = out.stay.I + out.arrivals.I;
  out.mixed.R = out.stay.R + out.arrivals.R;
  out.mixed.H = state.H;
  return out;
}

EpidemicState infection_substep(const EpidemicState& stay, const EpidemicState& arrivals,
                                const DiseaseParams& params,
                                InfectionBreakdown* breakdown) {
  const Index k = stay.num_regions();
  Vector new_stay(k);
  Vector new_move(k);
  // Per-group susceptible survival factors; the product form keeps S
  // non-negative under rounding when a group is almost fully infected.
  Vector keep_stay(k);
  Vector keep_move(k);
  for (Index i = 0; i < k; ++i) {
    double n_s = stay.S[i] + stay.I[i] + stay.R[i];
    if (params.hospitalized_in_staying_denominator) n_s += stay.H[i];
    const double n_m = arrivals.S[i] + arrivals.I[i] + arrivals.R[i];
    const double force_s = n_s > 0.0 ? params.beta_s * stay.I[i] / n_s : 0.0;
    const double force_m = n_m > 0.0 ? params.beta_m * arrivals.I[i] / n_m : 0.0;
    new_stay[i] = force_s * stay.S[i];
    new_move[i] = force_m * arrivals.S[i];
    keep_stay[i] = 1.0 - force_s;
    keep_move[i] = 1.0 - force_m;
  }
  const Vector i_hat = stay.I + arrivals.I;
  const Vector r_hat = stay.R + arrivals.R;
  const Vector& h = stay.H;
  const Vector infections = new_stay + new_move;

  EpidemicState next;
  next.S = stay.S.cwiseProduct(keep_stay) + arrivals.S.cwiseProduct(keep_move);
  next.I = (1.0 - params.gamma) * i_hat + infections;
  next.H = (1.0 - params.theta) * h + params.gamma * i_hat;
  next.R = r_hat + params.theta * h;
  for (Index i = 0; i < k; ++i) {
    if (next.S[i] < 0.0 || next.I[i] < 0.0 || next.H[i] < 0.0 || next.R[i] < 0.0) {
      throw StateError("negative compartment after infection sub-step in region " +
                       std::to_string(i) + " (S=" + std::to_string(next.S[i]) +
                       " I=" + std::to_string(next.I[i]) + " H=" + std::to_string(next.H[i]) +
                       " R=" + std::to_string(next.R[i]) + ")");
    }
  }
  if (breakdown != nullptr) {
    breakdown->staying = new_stay;
    breakdown->moving = new_move;
  }
  return next;
}

EpidemicState step_hour(const EpidemicState& state, const Matrix& allowed_flow,
                        const DiseaseParams& params, bool* clipped) {
  const MobilityOutcome moved = mobility_substep(state, allowed_flow);
  if (clipped != nullptr) *clipped = moved.clipped;
  return infection_substep(moved.stay, moved.arrivals, params);
}

double estimate_r0(const DiseaseParams& params, double p_move) {
  if (!(params.gamma > 0.0)) {
    throw InvalidParamsError("estimate_r0: gamma must be positive");
  }
  const double beta_bar = p_move * params.beta_m + (1.0 - p_move) * params.beta_s;
  return beta_bar / params.gamma;
}

VisibleState visible(const EpidemicState& state) {
  return {state.S + state.I, state.H, state.R};
}

VisibleDelta visible_delta(const VisibleState& current, const VisibleState& previous) {
  return {current.SI - previous.SI, current.H - previous.H, current.R - previous.R};
}

VisibleDelta zero_delta(Index num_regions) {
  return {Vector::Zero(num_regions), Vector::Zero(num_regions), Vector::Zero(num_regions)};
}

EpidemicState seed_infection(const EpidemicState& state, Index region, double count) {
  if (region < 0 || region >= state.num_regions()) {
    throw StateError("seed region out of range");
  }
  if (!(count >= 0.0)) throw StateError("seed count must be non-negative");
  if (count > state.S[region]) {
    throw StateError("seed count " + std::to_string(count) + " exceeds susceptible population " +
                     std::to_string(state.S[region]) + " of region " + std::to_string(region));
  }
  EpidemicState out = state;
  out.S[region] -= count;
  out.I[region] += count;
  return out;
}

void save_trajectory_csv(const std::vector<EpidemicState>& states, int first_hour,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out.precision(17);
  out << "hour,region,S,I,H,R\n";
  for (std::size_t t = 0; t < states.size(); ++t) {
    const EpidemicState& e = states[t];
    for (Index i = 0; i < e.num_regions(); ++i) {
      out << first_hour + static_cast<int>(t) << ',' << i << ',' << e.S[i] << ',' << e.I[i]
          << ',' << e.H[i] << ',' << e.R[i] << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace epiflow
