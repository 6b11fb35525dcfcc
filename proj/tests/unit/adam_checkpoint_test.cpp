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
#include <fstream>

#include "epiflow/errors.hpp"
#include "epiflow/nn/adam.hpp"
#include "epiflow/nn/checkpoint.hpp"
#include "test_util.hpp"

namespace epiflow::nn {
namespace {

using testing::random_matrix;

TEST(Adam, ZeroGradKeepsParamsAndDecaysMoments) {
  std::mt19937_64 rng(81);
  Parameter p("p", random_matrix(2, 3, rng));
  const Matrix before = p.value;
  std::vector<Parameter*> ps{&p};
  AdamState s = AdamState::For(ps, AdamConfig{});
  s.first_moment[0].setConstant(1.0);
  s.second_moment[0].setConstant(1.0);
  adam_update(s, ps);
  EXPECT_DOUBLE_EQ(s.first_moment[0](0, 0), 0.9);
  EXPECT_DOUBLE_EQ(s.second_moment[0](0, 0), 0.999);
  // Moments are nonzero, so params move; a fresh state leaves them.
  AdamState fresh = AdamState::For(ps, AdamConfig{});
  p.value = before;
  adam_update(fresh, ps);
  EXPECT_EQ(p.value, before);
}

TEST(Adam, FirstStepClosedForm) {
  Parameter p("p", Matrix::Constant(2, 2, 1.0));
  p.grad.setConstant(0.3);
  p.grad(1, 1) = -2.0;
  std::vector<Parameter*> ps{&p};
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  AdamState s = AdamState::For(ps, cfg);
  adam_update(s, ps);
  // Bias-corrected first step: m_hat = g, v_hat = g^2, so delta = -lr g / (|g| + eps).
  EXPECT_NEAR(p.value(0, 0), 1.0 - 0.01 * 0.3 / (0.3 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value(1, 1), 1.0 + 0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
}

TEST(Adam, DeterministicAndShapeChecked) {
  const auto run = [] {
    std::mt19937_64 rng(82);
    Parameter p("p", random_matrix(3, 3, rng));
    std::vector<Parameter*> ps{&p};
    AdamState s = AdamState::For(ps, AdamConfig{});
    for (int t = 0; t < 20; ++t) {
      p.grad = random_matrix(3, 3, rng);
      adam_update(s, ps);
    }
    return p.value;
  };
  EXPECT_EQ(run(), run());
  Parameter a("a", Matrix::Zero(1, 1));
  Parameter b("b", Matrix::Zero(1, 1));
  std::vector<Parameter*> one{&a};
  std::vector<Parameter*> two{&a, &b};
  AdamState s = AdamState::For(one, AdamConfig{});
  EXPECT_THROW(adam_update(s, two), DimensionError);
}

TEST(Checkpoint, RoundTripIsExact) {
  std::mt19937_64 rng(83);
  Parameter w("net.W", random_matrix(4, 3, rng));
  Parameter b("net.B", random_matrix(1, 3, rng));
  std::vector<Parameter*> ps{&w, &b};
  Checkpoint c;
  c.step = 1234;
  c.networks["actor"] = snapshot(ps);
  AdamState s = AdamState::For(ps, AdamConfig{});
  w.grad = random_matrix(4, 3, rng);
  adam_update(s, ps);
  c.optimizers["actor"] = s;
  c.scalars["noise_std"] = 0.0123456789012345678;
  c.config_json = R"({"hidden":8})";
  const auto dir = testing::temp_dir("checkpoint");
  save_checkpoint(c, dir / "c.json");
  const Checkpoint back = load_checkpoint(dir / "c.json");
  EXPECT_TRUE(back == c);

  Parameter w2("net.W", Matrix::Zero(4, 3));
  Parameter b2("net.B", Matrix::Zero(1, 3));
  restore(back.networks.at("actor"), {&w2, &b2});
  EXPECT_EQ(w2.value, c.networks["actor"][0].value);
  Parameter wrong("net.W", Matrix::Zero(3, 3));
  EXPECT_THROW(restore(back.networks.at("actor"), {&wrong, &b2}), DimensionError);
}

TEST(Checkpoint, MalformedFilesAreParseErrors) {
  const auto dir = testing::temp_dir("checkpoint_bad");
  {
    std::ofstream(dir / "a.json") << "{ not json";
    std::ofstream(dir / "b.json") << R"({"format":"something-else","version":1})";
  }
  EXPECT_THROW(load_checkpoint(dir / "a.json"), ParseError);
  EXPECT_THROW(load_checkpoint(dir / "b.json"), ParseError);
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), Error);
}

}  // namespace
}  // namespace epiflow::nn
