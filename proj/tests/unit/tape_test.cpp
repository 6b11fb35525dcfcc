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
#include "epiflow/nn/tape.hpp"
#include "test_util.hpp"

namespace epiflow::nn {
namespace {

using testing::gradient_check;
using testing::random_matrix;

constexpr double kTol = 1e-4;

TEST(TapeGrad, ElementwiseAndLinearOps) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_matrix(4, 3, rng);
    const Matrix b = random_matrix(3, 5, rng);
    const Matrix c = random_matrix(4, 3, rng);
    const Matrix row = random_matrix(1, 3, rng);
    const Matrix s = random_matrix(1, 1, rng);
    EXPECT_LE(gradient_check([](Tape& t, const auto& x) { return t.matmul(x[0], x[1]); },
                             {a, b}, {}, rng), kTol);
    EXPECT_LE(gradient_check([](Tape& t, const auto& x) { return t.add(x[0], x[1]); },
                             {a, c}, {}, rng), kTol);
    EXPECT_LE(gradient_check([](Tape& t, const auto& x) { return t.hadamard(x[0], x[1]); },
                             {a, c}, {}, rng), kTol);
    EXPECT_LE(gradient_check([](Tape& t, const auto& x) { return t.add_row(x[0], x[1]); },
                             {a, row}, {}, rng), kTol);
    EXPECT_LE(gradient_check([](Tape& t, const auto& x) { return t.add_scalar(x[0], x[1]); },
                             {a, s}, {}, rng), kTol);
    EXPECT_LE(gradient_check([](Tape& t, const auto& x) { return t.concat_cols(x[0], x[1]); },
                             {a, c}, {}, rng), kTol);
    EXPECT_LE(gradient_check([](Tape& t, const auto& x) { return t.scale(x[0], -2.5); }, {a},
                             {}, rng), kTol);
    for (Activation act : {Activation::kIdentity, Activation::kTanh, Activation::kSigmoid}) {
      EXPECT_LE(gradient_check([act](Tape& t, const auto& x) { return t.activate(x[0], act); },
                               {a}, {}, rng), kTol);
    }
    // ReLU away from its kink.
    Matrix away = a;
    for (Index k = 0; k < away.size(); ++k) away(k) += away(k) >= 0 ? 0.1 : -0.1;
    EXPECT_LE(gradient_check(
                  [](Tape& t, const auto& x) { return t.activate(x[0], Activation::kRelu); },
                  {away}, {}, rng), kTol);
    EXPECT_LE(gradient_check([](Tape& t, const auto& x) { return t.mean(x[0]); }, {a}, {}, rng),
              kTol);
    EXPECT_LE(gradient_check(
                  [](Tape& t, const auto& x) { return t.mean_squared_error(x[0], x[1]); },
                  {a, c}, {}, rng), kTol);
  }
}

TEST(TapeGrad, GraphOps) {
  std::mt19937_64 rng(62);
  const Index k = 4;
  const Index b = 3;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix f = random_matrix(b * k, 2, rng);
    // Transport rows sum below one.
    Matrix tr = random_matrix(b * k, k, rng, 0.0, 0.2);
    Matrix mask = random_matrix(b * k, k, rng, 0.0, 1.0);
    for (Index i = 0; i < mask.size(); ++i) mask(i) = mask(i) > 0.4 ? 1.0 : 0.0;
    const Matrix w = random_matrix(b * k, k, rng, -2.0, 2.0);
    EXPECT_LE(gradient_check([&](Tape& t, const auto& x) { return t.flow_aggregate(x[0], x[1], k); },
                             {f, tr}, {}, rng), kTol);
    EXPECT_LE(gradient_check(
                  [&](Tape& t, const auto& x) {
                    return t.mean_aggregate(x[0], t.constant(mask), k);
                  },
                  {f}, {}, rng), kTol);
    EXPECT_LE(gradient_check(
                  [&](Tape& t, const auto& x) {
                    return t.softmax_aggregate(x[0], x[1], t.constant(mask), k);
                  },
                  {f, w}, {}, rng), kTol);
    EXPECT_LE(gradient_check([&](Tape& t, const auto& x) { return t.block_mean(x[0], k); }, {f},
                             {}, rng), kTol);
    const Matrix src = random_matrix(b * k, 1, rng);
    const Matrix dst = random_matrix(b * k, 1, rng);
    EXPECT_LE(gradient_check(
                  [&](Tape& t, const auto& x) { return t.pairwise_sum(x[0], x[1], k); },
                  {src, dst}, {}, rng), kTol);
    const Matrix x0 = random_matrix(b * k, k, rng);
    const Matrix x1 = random_matrix(b * k, k, rng);
    const Matrix coef = random_matrix(1, 2, rng);
    EXPECT_LE(gradient_check(
                  [&](Tape& t, const auto& x) { return t.weighted_sum({x[0], x[1]}, x[2]); },
                  {x0, x1, coef}, {}, rng), kTol);
  }
}

TEST(Tape, ZeroUpstreamGivesZeroParameterGrads) {
  std::mt19937_64 rng(63);
  Parameter w("w", random_matrix(3, 2, rng));
  Tape tape;
  const Tape::Id out = tape.matmul(tape.constant(random_matrix(4, 3, rng)), tape.param(w));
  tape.backward(out, Matrix::Zero(4, 2));
  EXPECT_TRUE(w.grad.isZero(0.0));
}

TEST(Tape, LinearLayerGradIsOuterProduct) {
  std::mt19937_64 rng(64);
  Parameter w("w", random_matrix(3, 2, rng));
  const Matrix x = random_matrix(1, 3, rng);
  const Matrix up = random_matrix(1, 2, rng);
  Tape tape;
  const Tape::Id out = tape.matmul(tape.constant(x), tape.param(w));
  tape.backward(out, up);
  EXPECT_TRUE(w.grad.isApprox(x.transpose() * up, 1e-14));
}

TEST(Tape, FrozenParametersTakeNoGradient) {
  std::mt19937_64 rng(65);
  Parameter w("w", random_matrix(3, 2, rng));
  Tape tape;
  tape.freeze({&w});
  const Tape::Id x = tape.input(random_matrix(4, 3, rng));
  const Tape::Id out = tape.mean(tape.matmul(x, tape.param(w)));
  tape.backward(out);
  EXPECT_TRUE(w.grad.isZero(0.0));
  EXPECT_GT(tape.grad(x).norm(), 0.0);
}

TEST(Tape, FlowAggregateHandCase) {
  // f = ([1,0],[0,1]), M(0,1) = 5, N = 10.
  Matrix f(2, 2);
  f << 1, 0, 0, 1;
  Matrix t = Matrix::Zero(2, 2);
  t(0, 1) = 0.5;
  Tape tape;
  const Matrix out = tape.value(tape.flow_aggregate(tape.constant(f), tape.constant(t), 2));
  // [in | stay]
  Matrix want(2, 4);
  want << 0, 0, 0.5, 0,  //
      0.5, 0, 0, 1;
  EXPECT_TRUE(out.isApprox(want, 1e-15));
}

}  // namespace
}  // namespace epiflow::nn
