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
#include <limits>

#include "epiflow/errors.hpp"
#include "epiflow/experts.hpp"
#include "test_util.hpp"

namespace epiflow {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

bool rows_constant(const QuotaMatrix& q) {
  for (Index i = 0; i < q.num_regions(); ++i) {
    if ((q.rates().row(i).array() != q(i, 0)).any()) return false;
  }
  return true;
}

TEST(EpFixed, FillsEveryEntry) {
  EXPECT_TRUE(ep_fixed(3, 0.15).rates().isApprox(Matrix::Constant(3, 3, 0.15)));
  EXPECT_EQ(ep_fixed(3, 1.0).rates(), Matrix::Ones(3, 3));
  EXPECT_EQ(ep_fixed(3, 0.0).rates(), Matrix::Zero(3, 3));
}

TEST(EpSoft, RuleCases) {
  EXPECT_EQ(ep_soft(Vector::Zero(3), Vector::Zero(3), 0.0, 168.0).rates(), Matrix::Ones(3, 3));
  const QuotaMatrix q = ep_soft(vec({5, 0, 0}), vec({0, 0, 0}), 0.0, 168.0);
  EXPECT_TRUE(q.rates().row(0).isZero(0.0));
  EXPECT_TRUE(q.rates().bottomRows(2).isOnes(0.0));
  const QuotaMatrix capped = ep_soft(vec({5, 0, 0}), vec({200, 0, 0}), 0.0, 168.0);
  EXPECT_TRUE(capped.rates().row(0).isOnes(0.0));
}

TEST(EpHard, RuleCases) {
  using Recent = std::vector<std::optional<double>>;
  EXPECT_TRUE(ep_hard(vec({3, 0}), Recent{0.0, 5.0}, 0.0).rates().row(0).isOnes(0.0));
  EXPECT_EQ(ep_hard(vec({0, 0}), Recent{1.0, 1.0}, 0.0).rates(), Matrix::Ones(2, 2));
  EXPECT_TRUE(ep_hard(vec({3, 0}), Recent{2.0, 5.0}, 0.0).rates().row(0).isZero(0.0));
  EXPECT_THROW(ep_hard(vec({3, 0}), Recent{2.0}, 0.0), DimensionError);
}

TEST(EpLockdown, RuleCases) {
  const QuotaMatrix q = ep_lockdown(vec({1e-9, 0}), vec({1e9, 0}));
  EXPECT_TRUE(q.rates().row(0).isZero(0.0));
  EXPECT_TRUE(q.rates().row(1).isOnes(0.0));
  EXPECT_EQ(ep_lockdown(Vector::Zero(2), Vector::Zero(2)).rates(), Matrix::Ones(2, 2));
}

TEST(PseudoExpert, Boundaries) {
  EXPECT_TRUE(pseudo_expert(vec({1.0}), vec({0.0})).rates().isOnes(0.0));
  EXPECT_TRUE(pseudo_expert(vec({2.0}), vec({0.0})).rates().isZero(0.0));
  EXPECT_TRUE(pseudo_expert(vec({2.0}), vec({169.0})).rates().isOnes(0.0));
}

TEST(ExpertProperty, RowsConstantAndSoftLimitIsLockdown) {
  std::mt19937_64 rng(51);
  const double inf = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 200; ++t) {
    const Vector h = testing::random_matrix(6, 1, rng, -1.0, 3.0).cwiseMax(0.0);
    const Vector l = testing::random_matrix(6, 1, rng, 0.0, 400.0);
    const QuotaMatrix soft = ep_soft(h, l, 0.5, 168.0);
    EXPECT_TRUE(rows_constant(soft));
    EXPECT_TRUE(rows_constant(ep_lockdown(h, l)));
    EXPECT_EQ(ep_soft(h, l, 0.0, inf).rates(), ep_lockdown(h, l).rates());
    // Pure functions: the same inputs give the same output.
    EXPECT_EQ(ep_soft(h, l, 0.5, 168.0).rates(), soft.rates());
  }
}

TEST(HardPolicy, ReopensAfterAFullWeekLocked) {
  std::vector<Matrix> hourly(24 * 20, Matrix::Zero(2, 2));
  for (Matrix& m : hourly) m(0, 1) = m(1, 0) = 5.0;
  auto series = std::make_shared<const MobilitySeries>(
      MobilitySeries::FromHourly(hourly, Vector::Constant(2, 100.0)));
  HardPolicy policy(0.0, 7);
  Observation obs;
  obs.series = series;
  obs.loss = Vector::Zero(2);
  obs.visible = {Vector::Constant(2, 100.0), Vector::Zero(2), Vector::Zero(2)};
  obs.visible.H[0] = 2.0;
  int first_reopen = -1;
  for (int hour = 0; hour < 24 * 10; hour += 4) {
    obs.hour = hour;
    const QuotaMatrix q = policy.act(obs);
    if (hour < 24) {
      EXPECT_TRUE(q.rates().row(0).isZero(0.0));
    }
    if (first_reopen < 0 && q(0, 0) == 1.0) first_reopen = hour;
  }
  // Locked from day 0; the rule sees a full zero-outflow week on day 7.
  EXPECT_EQ(first_reopen, 24 * 7);
}

TEST(MakeExpertPolicy, KnownAndUnknownNames) {
  ExpertParams p;
  for (const char* n : {"no-intervention", "ep-soft", "ep-hard", "ep-lockdown", "pseudo-expert"}) {
    EXPECT_EQ(make_expert_policy(n, p)->name(), n);
  }
  EXPECT_EQ(make_expert_policy("ep-fixed", p)->name().rfind("ep-fixed", 0), 0u);
  EXPECT_THROW(make_expert_policy("oracle", p), ConfigError);
}

}  // namespace
}  // namespace epiflow
