// Copyright 2026 The LDP Partition Authors
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

#include "ldp_partition/synthdata.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ldp_partition/rng.h"
#include "ldp_partition/stats.h"

namespace ldp_partition {
namespace {

constexpr double kPi = std::numbers::pi;

Scenario MustMake(std::string_view name, int d, ScenarioParams params = {}) {
  auto scenario = MakeScenario(name, d, params);
  EXPECT_TRUE(scenario.ok()) << scenario.status();
  return *std::move(scenario);
}

double Euclidean(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t l = 0; l < a.size(); ++l) sum += (a[l] - b[l]) * (a[l] - b[l]);
  return std::sqrt(sum);
}

TEST(MakeScenarioTest, DeclaredProperties) {
  const Scenario lipschitz = MustMake("lipschitz-uniform", 2);
  EXPECT_FALSE(lipschitz.is_classification);
  EXPECT_TRUE(lipschitz.density_bounded_below);
  EXPECT_TRUE(lipschitz.y_second_moment_finite);
  EXPECT_DOUBLE_EQ(*lipschitz.lipschitz_const, 2.0 * kPi / std::sqrt(2.0));

  const Scenario heavy = MustMake("heavytail-mixture", 3);
  EXPECT_FALSE(heavy.density_bounded_below);
  EXPECT_DOUBLE_EQ(*heavy.lipschitz_const, std::sqrt(3.0));

  const Scenario classify = MustMake("classification-smooth", 1);
  EXPECT_TRUE(classify.is_classification);
}

TEST(MakeScenarioTest, Errors) {
  EXPECT_EQ(MakeScenario("nope", 1).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(MakeScenario("lipschitz-uniform", 0).ok());
  EXPECT_FALSE(MakeScenario("heavytail-mixture", 1, {.atom_weight = 1.0}).ok());
  EXPECT_FALSE(MakeScenario("lipschitz-uniform", 1, {.noise_scale = -1}).ok());
}

TEST(MakeScenarioTest, RegressionFunctionValues) {
  const Scenario lipschitz = MustMake("lipschitz-uniform", 1);
  EXPECT_NEAR(lipschitz.true_m(std::vector<double>{0.25}), 1.0, 1e-15);
  EXPECT_NEAR(lipschitz.true_m(std::vector<double>{0.75}), -1.0, 1e-15);
  const Scenario lipschitz2 = MustMake("lipschitz-uniform", 2);
  EXPECT_NEAR(lipschitz2.true_m(std::vector<double>{0.25, 0.5}), 0.5, 1e-15);

  const Scenario heavy = MustMake("heavytail-mixture", 2);
  EXPECT_EQ(heavy.true_m(std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_EQ(heavy.true_m(std::vector<double>{-0.5, 0.25}), 0.75);
}

TEST(MakeScenarioTest, BayesErrorByQuadrature) {
  // Bayes error E[min(eta, 1 - eta)] = E[(1 - |m(X)|) / 2] = 1/2 - 1/pi.
  const Scenario classify = MustMake("classification-smooth", 1);
  constexpr int kSteps = 200000;
  double sum = 0.0;
  for (int i = 0; i < kSteps; ++i) {
    const std::vector<double> x{(i + 0.5) / kSteps};
    sum += 0.5 * (1.0 - *BayesExcessWeight(classify, x));
  }
  EXPECT_NEAR(sum / kSteps, 0.18169011381620934, 1e-6);
}

TEST(BayesExcessWeightTest, Values) {
  const Scenario classify = MustMake("classification-smooth", 2);
  EXPECT_NEAR(*BayesExcessWeight(classify, std::vector<double>{0.75, 0.3}),
              1.0, 1e-15);
  EXPECT_NEAR(*BayesExcessWeight(classify, std::vector<double>{0.5, 0.9}), 0.0,
              1e-15);
  const Scenario lipschitz = MustMake("lipschitz-uniform", 1);
  EXPECT_FALSE(BayesExcessWeight(lipschitz, std::vector<double>{0.1}).ok());
}

TEST(MakeScenarioTest, LipschitzSpotChecks) {
  std::mt19937_64 gen(9);
  for (std::string_view name : kScenarioNames) {
    for (int d = 1; d <= 3; ++d) {
      const Scenario scenario = MustMake(name, d);
      std::uniform_real_distribution<double> coord(-1.0, 1.0);
      for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> a(d), b(d);
        for (int l = 0; l < d; ++l) {
          a[l] = coord(gen);
          b[l] = a[l] + 0.01 * coord(gen);
        }
        EXPECT_LE(std::abs(scenario.true_m(a) - scenario.true_m(b)),
                  *scenario.lipschitz_const * Euclidean(a, b) + 1e-12)
            << name << " d=" << d;
      }
    }
  }
}

TEST(SampleTest, SupportsAndLabels) {
  RngStream rng(3);
  const Dataset lipschitz = MustMake("lipschitz-uniform", 2).sample_xy(rng, 5000);
  ASSERT_EQ(lipschitz.size(), 5000u);
  for (double v : lipschitz.x) EXPECT_TRUE(v > 0.0 && v < 1.0);
  for (double y : lipschitz.y) EXPECT_LE(std::abs(y), 2.0);

  const Dataset classify =
      MustMake("classification-smooth", 1).sample_xy(rng, 5000);
  for (double y : classify.y) EXPECT_TRUE(y == 1.0 || y == -1.0);

  const Dataset heavy = MustMake("heavytail-mixture", 2).sample_xy(rng, 20000);
  size_t at_atom = 0;
  for (size_t i = 0; i < heavy.size(); ++i) {
    const std::span<const double> x = heavy.point(i);
    if (x[0] == 0.0 && x[1] == 0.0) ++at_atom;
    for (double v : x) EXPECT_TRUE(v >= -1.0 && v <= 1.0);
  }
  // Binomial(20000, 0.3): sd about 65.
  EXPECT_NEAR(static_cast<double>(at_atom), 6000.0, 4.0 * 65.0);
}

TEST(SampleTest, Determinism) {
  const Scenario scenario = MustMake("heavytail-mixture", 2);
  RngStream a(77), b(77);
  const Dataset first = scenario.sample_xy(a, 100);
  const Dataset second = scenario.sample_xy(b, 100);
  EXPECT_EQ(first.x, second.x);
  EXPECT_EQ(first.y, second.y);
}

// E[Y | X near x0] matches m(x0), estimated by rejection in a small ball.
TEST(SampleTest, ConditionalMeanNearPoint) {
  struct Case {
    std::string_view name;
    std::vector<double> x0;
    double radius;
  };
  const Case cases[] = {{"lipschitz-uniform", {0.25}, 0.005},
                        {"lipschitz-uniform", {0.6}, 0.005},
                        {"classification-smooth", {0.1}, 0.005},
                        {"heavytail-mixture", {0.0}, 0.0},
                        {"heavytail-mixture", {0.5}, 0.005}};
  RngStream rng(11);
  for (const Case& c : cases) {
    const Scenario scenario = MustMake(c.name, 1);
    const Dataset data = scenario.sample_xy(rng, 2000000);
    RunningStats kept;
    for (size_t i = 0; i < data.size(); ++i) {
      if (std::abs(data.point(i)[0] - c.x0[0]) <= c.radius) kept.Add(data.y[i]);
    }
    ASSERT_GT(kept.count(), 1000) << c.name;
    const double drift = *scenario.lipschitz_const * c.radius;
    EXPECT_NEAR(kept.mean(), scenario.true_m(c.x0),
                4.0 * kept.standard_error() + drift)
        << c.name << " at " << c.x0[0];
  }
}

TEST(SampleTest, MarginalMatchesPairSampler) {
  for (std::string_view name : kScenarioNames) {
    const Scenario scenario = MustMake(name, 1);
    RngStream a(101), b(202);
    const std::vector<double> marginal = scenario.sample_x(a, 20000);
    const Dataset pairs = scenario.sample_xy(b, 20000);
    const KsResult ks = KsTwoSample(marginal, pairs.x);
    EXPECT_GT(ks.p_value, 0.001) << name;
  }
}

}  // namespace
}  // namespace ldp_partition
