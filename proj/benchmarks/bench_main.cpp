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
#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "epiflow/agent.hpp"
#include "epiflow/control_env.hpp"
#include "epiflow/nn/layers.hpp"
#include "epiflow/replay_buffer.hpp"
#include "epiflow/sihr.hpp"

namespace epiflow {
namespace {

Matrix random_flow(Index k, const Vector& movable, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m = Matrix::Zero(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) m(i, j) = i == j ? 0.0 : u(rng);
    m.row(i) *= 0.18 * movable[i] / m.row(i).sum();
  }
  return m;
}

void BM_StepHour(benchmark::State& state) {
  const Index k = state.range(0);
  std::mt19937_64 rng(1);
  EpidemicState e = EpidemicState::Susceptible(Vector::Constant(k, 1686.0));
  e = seed_infection(e, 0, 10.0);
  const Matrix flow = random_flow(k, e.movable(), rng);
  const DiseaseParams params;
  for (auto _ : state) {
    e = step_hour(e, flow, params);
    benchmark::DoNotOptimize(e.S.data());
  }
  state.SetItemsProcessed(state.iterations() * k);
}
BENCHMARK(BM_StepHour)->Arg(16)->Arg(64)->Arg(323);

void BM_FlowGnnForward(benchmark::State& state) {
  const Index k = state.range(0);
  const Index f = state.range(1);
  std::mt19937_64 rng(2);
  nn::GraphLayer layer(nn::GraphLayerKind::kFlow, f, f, nn::Activation::kRelu, "b", rng);
  const Vector movable = Vector::Constant(k, 1000.0);
  const Matrix flow = random_flow(k, movable, rng);
  const Matrix x = Matrix::Random(k, f);
  for (auto _ : state) benchmark::DoNotOptimize(nn::flow_gnn_forward(x, flow, movable, layer));
}
BENCHMARK(BM_FlowGnnForward)->Args({16, 16})->Args({16, 32})->Args({323, 32});

void BM_FlowGnnBackward(benchmark::State& state) {
  const Index k = state.range(0);
  const Index f = state.range(1);
  std::mt19937_64 rng(3);
  nn::GraphLayer layer(nn::GraphLayerKind::kFlow, f, f, nn::Activation::kRelu, "b", rng);
  const Matrix transport = random_flow(k, Vector::Constant(k, 1.0), rng);
  const Matrix x = Matrix::Random(k, f);
  for (auto _ : state) {
    nn::Tape tape;
    nn::EdgeInputs edges;
    edges.weights = tape.constant_ref(transport);
    const nn::Tape::Id out = tape.mean(layer.forward(tape, tape.input(x), edges, k));
    tape.backward(out);
    benchmark::DoNotOptimize(layer.weight().grad.data());
  }
}
BENCHMARK(BM_FlowGnnBackward)->Args({16, 16})->Args({16, 32})->Args({323, 32});

// One DDPG update on the desk-scale city; sets the cost of training.
void BM_TrainStep(benchmark::State& state) {
  CityGenParams city;
  city.grid_rows = 4;
  city.grid_cols = 4;
  city.seed = 1;
  auto series = std::make_shared<const MobilitySeries>(generate_synthetic_city(city));
  EnvConfig env;
  env.t_start_days = 0;
  env.horizon_days = 14;
  env.record_region_detail = false;
  AgentConfig cfg;
  cfg.network.hidden = state.range(0);
  DdpgAgent agent(series, FeatureContext::From(*series, env), cfg, ExpertParams{}, 4);
  ControlEnv control(series, DiseaseParams{}, env);
  Observation obs = control.reset(InitSpec::Fixed(0, 10.0));
  std::vector<Transition> store;
  for (int i = 0; i < 32; ++i) {
    const QuotaMatrix q = agent.act(obs);
    const StepOutcome out = control.step(q);
    store.push_back({CompactObservation::From(obs), q.rates(), agent.training_reward(out),
                     CompactObservation::From(out.observation), false});
    obs = out.observation;
  }
  std::vector<const Transition*> batch;
  for (const Transition& t : store) batch.push_back(&t);
  for (auto _ : state) benchmark::DoNotOptimize(agent.train_step(batch));
}
BENCHMARK(BM_TrainStep)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace epiflow

BENCHMARK_MAIN();
