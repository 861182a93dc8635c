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

#include "ldp_partition/evaluate.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>
#include <numbers>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "ldp_partition/collector.h"
#include "ldp_partition/estimator.h"
#include "ldp_partition/mechanism.h"
#include "ldp_partition/partition.h"
#include "ldp_partition/rng.h"
#include "ldp_partition/synthdata.h"

namespace ldp_partition {
namespace {

using ::testing::HasSubstr;

Scenario MustMake(std::string_view name, int d) {
  auto scenario = MakeScenario(name, d);
  EXPECT_TRUE(scenario.ok()) << scenario.status();
  return *std::move(scenario);
}

TEST(L2RiskTest, OracleEstimateHasZeroRisk) {
  const Scenario scenario = MustMake("lipschitz-uniform", 2);
  RngStream rng(1);
  auto risk = L2Risk(scenario.true_m, scenario, 10000, rng);
  ASSERT_TRUE(risk.ok());
  EXPECT_EQ(risk->point_estimate, 0.0);
  EXPECT_EQ(risk->std_error, 0.0);
  EXPECT_EQ(risk->kind, RiskKind::kL2Regression);
}

TEST(L2RiskTest, ZeroEstimateRiskIsSecondMomentOfM) {
  // E sin^2(2 pi U) = 1/2.
  const Scenario scenario = MustMake("lipschitz-uniform", 1);
  RngStream rng(2);
  auto zero = [](std::span<const double>) { return 0.0; };
  auto risk = L2Risk(zero, scenario, 100000, rng);
  ASSERT_TRUE(risk.ok());
  EXPECT_NEAR(risk->point_estimate, 0.5, 4.0 * risk->std_error);
  EXPECT_EQ(risk->n_test, 100000);
}

TEST(L2RiskTest, StandardErrorShrinksWithTestSize) {
  const Scenario scenario = MustMake("lipschitz-uniform", 1);
  auto zero = [](std::span<const double>) { return 0.0; };
  RngStream a(3), b(4);
  auto small = L2Risk(zero, scenario, 50000, a);
  auto large = L2Risk(zero, scenario, 200000, b);
  ASSERT_TRUE(small.ok() && large.ok());
  EXPECT_NEAR(small->std_error / large->std_error, 2.0, 0.1);
}

TEST(L2RiskTest, Errors) {
  const Scenario scenario = MustMake("lipschitz-uniform", 1);
  RngStream rng(5);
  EXPECT_FALSE(L2Risk(scenario.true_m, scenario, 0, rng).ok());
}

TEST(ExcessClassRiskTest, BayesClassifierHasZeroExcess) {
  const Scenario scenario = MustMake("classification-smooth", 1);
  auto bayes = [&](std::span<const double> x) {
    return scenario.true_m(x) > 0.0 ? 1 : -1;
  };
  RngStream rng(6);
  auto risk = ExcessClassRisk(bayes, scenario, 50000, rng);
  ASSERT_TRUE(risk.ok());
  EXPECT_EQ(risk->point_estimate, 0.0);
  EXPECT_EQ(risk->kind, RiskKind::kExcessClassification);
}

TEST(ExcessClassRiskTest, ConstantClassifier) {
  // Wrong exactly where sin(2 pi x) > 0: E[sin^+] = 1/pi.
  const Scenario scenario = MustMake("classification-smooth", 1);
  auto minus_one = [](std::span<const double>) { return -1; };
  RngStream rng(7);
  auto risk = ExcessClassRisk(minus_one, scenario, 200000, rng);
  ASSERT_TRUE(risk.ok());
  EXPECT_NEAR(risk->point_estimate, 1.0 / std::numbers::pi,
              4.0 * risk->std_error);
}

TEST(ExcessClassRiskTest, PrivateClassifierWithinRange) {
  const Scenario scenario = MustMake("classification-smooth", 1);
  auto table = CellTable::Create({.h = 0.1, .d = 1, .radius = 2.0});
  ASSERT_TRUE(table.ok());
  auto cells = std::make_shared<const CellTable>(*std::move(table));
  auto params = Calibrate(2.0, 1.0);
  ASSERT_TRUE(params.ok());
  for (uint64_t seed = 0; seed < 5; ++seed) {
    RngStream data_rng(seed), noise_rng(seed + 100), risk_rng(seed + 200);
    const Dataset data = scenario.sample_xy(data_rng, 2000);
    auto agg = AggregateFast(cells, *params, data, noise_rng);
    ASSERT_TRUE(agg.ok());
    auto risk = ExcessClassRisk(*agg, scenario, 20000, risk_rng);
    ASSERT_TRUE(risk.ok());
    EXPECT_GE(risk->point_estimate, 0.0);
    EXPECT_LE(risk->point_estimate, 2.0 / std::numbers::pi);
  }
}

TEST(ExcessClassRiskTest, RejectsRegressionScenario) {
  const Scenario scenario = MustMake("lipschitz-uniform", 1);
  auto minus_one = [](std::span<const double>) { return -1; };
  RngStream rng(8);
  EXPECT_FALSE(ExcessClassRisk(minus_one, scenario, 10, rng).ok());
}

TEST(LemmaACheckTest, BoundValues) {
  RngStream rng(9);
  auto check = LemmaACheck(1, 1.9, 10, rng);
  ASSERT_TRUE(check.ok());
  EXPECT_NEAR(check->bound, 0.8111090101266412, 1e-15);
  check = LemmaACheck(10, 1.0, 10, rng);
  ASSERT_TRUE(check.ok());
  EXPECT_NEAR(check->bound, 0.1641699972477976, 1e-15);
}

TEST(LemmaACheckTest, RejectsEpsilonOutsideRange) {
  RngStream rng(10);
  EXPECT_FALSE(LemmaACheck(10, 0.0, 10, rng).ok());
  EXPECT_FALSE(LemmaACheck(10, 2.0, 10, rng).ok());
  EXPECT_FALSE(LemmaACheck(10, -0.5, 10, rng).ok());
  EXPECT_FALSE(LemmaACheck(0, 0.5, 10, rng).ok());
}

TEST(LemmaACheckTest, SmallGridPasses) {
  RngStream rng(11);
  for (int64_t n : {10, 100}) {
    for (double eps : {0.25, 0.5, 1.0, 1.9}) {
      auto check = LemmaACheck(n, eps, 20000, rng);
      ASSERT_TRUE(check.ok());
      EXPECT_TRUE(check->pass) << "n=" << n << " eps=" << eps << " tail "
                               << check->empirical_tail << " bound "
                               << check->bound;
    }
  }
}

TEST(VarianceIdentityTest, NoiselessIsExact) {
  const Scenario scenario = MustMake("lipschitz-uniform", 1);
  auto cells = CellTable::Create({.h = 0.25, .d = 1, .radius = 1.0});
  ASSERT_TRUE(cells.ok());
  const PrivacyParams params{.alpha = 1.0, .sigma_w = 0.0, .sigma_z = 0.0,
                             .m_trunc = 5.0};
  RngStream rng(12);
  auto check =
      VarianceIdentityCheck(scenario, *cells, params, 100, {{1}}, 200, rng);
  ASSERT_TRUE(check.ok());
  EXPECT_EQ(check->lhs, check->rhs);
  EXPECT_EQ(check->rel_err, 0.0);
  EXPECT_TRUE(check->pass);
}

TEST(VarianceIdentityTest, ZeroResponseLeavesOnlyNoise) {
  Scenario scenario = MustMake("lipschitz-uniform", 1);
  auto base_sampler = scenario.sample_xy;
  scenario.sample_xy = [base_sampler](RngStream& rng, size_t n) {
    Dataset data = base_sampler(rng, n);
    std::fill(data.y.begin(), data.y.end(), 0.0);
    return data;
  };
  auto cells = CellTable::Create({.h = 0.25, .d = 1, .radius = 1.0});
  ASSERT_TRUE(cells.ok());
  auto params = Calibrate(2.0, 1.0);
  ASSERT_TRUE(params.ok());
  RngStream rng(13);
  auto check =
      VarianceIdentityCheck(scenario, *cells, *params, 50, {{0}}, 4000, rng);
  ASSERT_TRUE(check.ok());
  EXPECT_EQ(check->rhs, params->sigma_z * params->sigma_z);
  EXPECT_LE(check->rel_err, kVarianceIdentityTolerance);
}

TEST(VarianceIdentityTest, HoldsForBuiltInScenarios) {
  struct Case {
    std::string_view name;
    std::vector<int64_t> cell;
    AggregationMode mode;
  };
  const Case cases[] = {
      {"lipschitz-uniform", {1}, AggregationMode::kFast},
      {"lipschitz-uniform", {2}, AggregationMode::kFaithful},
      {"heavytail-mixture", {0}, AggregationMode::kFast},
      {"heavytail-mixture", {-2}, AggregationMode::kFast},
  };
  auto schedule = Schedules(200, 1, {});
  ASSERT_TRUE(schedule.ok());
  auto params = Calibrate(2.0, schedule->m_trunc);
  ASSERT_TRUE(params.ok());
  auto cells = CellTable::Create(
      {.h = schedule->h, .d = 1, .radius = schedule->radius});
  ASSERT_TRUE(cells.ok());
  RngStream rng(14);
  for (const Case& c : cases) {
    auto check = VarianceIdentityCheck(MustMake(c.name, 1), *cells, *params,
                                       200, {c.cell}, 3000, rng, c.mode);
    ASSERT_TRUE(check.ok()) << check.status();
    EXPECT_TRUE(check->pass)
        << c.name << " lhs " << check->lhs << " rhs " << check->rhs;
  }
}

TEST(VarianceIdentityTest, Errors) {
  const Scenario scenario = MustMake("lipschitz-uniform", 1);
  auto cells = CellTable::Create({.h = 0.25, .d = 1, .radius = 1.0});
  ASSERT_TRUE(cells.ok());
  auto params = Calibrate(2.0, 1.0);
  RngStream rng(15);
  EXPECT_FALSE(
      VarianceIdentityCheck(scenario, *cells, *params, 10, {{99}}, 10, rng)
          .ok());
  EXPECT_FALSE(
      VarianceIdentityCheck(scenario, *cells, *params, 10, {{0}}, 1, rng).ok());
  EXPECT_FALSE(VarianceIdentityCheck(MustMake("lipschitz-uniform", 2), *cells,
                                     *params, 10, {{0}}, 10, rng)
                   .ok());
}

SweepConfig SmallSweep(std::string_view scenario) {
  SweepConfig config;
  config.scenario = MustMake(scenario, 1);
  config.ns = {256, 1024};
  config.seeds = {1, 2, 3};
  config.n_test = 2000;
  config.master_seed = 42;
  return config;
}

TEST(ConsistencySweepTest, RowsComposeFromParts) {
  const SweepConfig config = SmallSweep("lipschitz-uniform");
  auto result = ConsistencySweep(config);
  ASSERT_TRUE(result.ok());
  ASSERT_EQ(result->rows.size(), 6u);

  // Recompute the (1024, seed 2) row by hand from the documented substreams.
  const SweepRow& row = result->rows[4];
  EXPECT_EQ(row.n, 1024);
  EXPECT_EQ(row.seed, 2u);
  const SweepPointSeeds seeds = SeedsForSweepPoint(42, 1024, 2);
  auto schedule = Schedules(1024, 1, {});
  ASSERT_TRUE(schedule.ok());
  auto cells = std::make_shared<const CellTable>(*CellTable::Create(
      {.h = schedule->h, .d = 1, .radius = schedule->radius}));
  auto params = Calibrate(2.0, schedule->m_trunc);
  RngStream data_rng(seeds.data), noise_rng(seeds.noise), risk_rng(seeds.risk);
  const Dataset data = config.scenario.sample_xy(data_rng, 1024);
  auto agg = AggregateFast(cells, *params, data, noise_rng);
  ASSERT_TRUE(agg.ok());
  auto estimate = FitPrivateRegression(*agg, schedule->c);
  ASSERT_TRUE(estimate.ok());
  auto risk = L2Risk(*estimate, config.scenario, config.n_test, risk_rng);
  ASSERT_TRUE(risk.ok());
  EXPECT_EQ(row.risk, risk->point_estimate);
  EXPECT_EQ(row.std_error, risk->std_error);
  EXPECT_EQ(row.h, schedule->h);
  EXPECT_EQ(row.c, schedule->c);
  EXPECT_EQ(row.m_trunc, schedule->m_trunc);
  EXPECT_EQ(row.condition_2d, schedule->condition_2d);

  auto single = RunSweepPoint(config, 1024, 2);
  ASSERT_TRUE(single.ok());
  EXPECT_EQ(single->risk, row.risk);

  ASSERT_EQ(result->medians.size(), 2u);
  EXPECT_EQ(result->medians[1].median_risk,
            Median({result->rows[3].risk, result->rows[4].risk,
                    result->rows[5].risk}));
  ASSERT_TRUE(result->loglog_slope.has_value());
}

TEST(ConsistencySweepTest, JobCountDoesNotChangeOutput) {
  for (std::string_view name : {"lipschitz-uniform", "classification-smooth"}) {
    SweepConfig config = SmallSweep(name);
    auto serial = ConsistencySweep(config);
    config.jobs = 4;
    auto parallel = ConsistencySweep(config);
    ASSERT_TRUE(serial.ok() && parallel.ok());
    EXPECT_EQ(SweepCsv(*serial), SweepCsv(*parallel));
    EXPECT_EQ(SweepSummaryJson(*serial).dump(), SweepSummaryJson(*parallel).dump());
  }
}

TEST(ConsistencySweepTest, FaithfulModeRuns) {
  SweepConfig config = SmallSweep("heavytail-mixture");
  config.mode = AggregationMode::kFaithful;
  config.ns = {128};
  auto result = ConsistencySweep(config);
  ASSERT_TRUE(result.ok());
  for (const SweepRow& row : result->rows) EXPECT_TRUE(std::isfinite(row.risk));
  EXPECT_FALSE(result->loglog_slope.has_value());
}

TEST(ConsistencySweepTest, NonPrivateBeatsPrivate) {
  SweepConfig config = SmallSweep("lipschitz-uniform");
  config.ns = {4096};
  auto private_result = ConsistencySweep(config);
  config.non_private = true;
  auto plain_result = ConsistencySweep(config);
  ASSERT_TRUE(private_result.ok() && plain_result.ok());
  EXPECT_LT(plain_result->medians[0].median_risk,
            private_result->medians[0].median_risk);
  EXPECT_TRUE(std::isinf(plain_result->rows[0].m_trunc));
}

// Mean excess risk of the private classifier over many seeds against the
// expectation computed by quadrature with a Gaussian approximation of the
// cell noise (classification-smooth, n = 4096, alpha = 2, default schedules).
TEST(ConsistencySweepTest, ClassificationRiskMatchesExpectation) {
  SweepConfig config = SmallSweep("classification-smooth");
  config.ns = {4096};
  config.seeds.clear();
  for (uint64_t s = 1; s <= 120; ++s) config.seeds.push_back(s);
  config.n_test = 20000;
  auto result = ConsistencySweep(config);
  ASSERT_TRUE(result.ok());
  RunningStats risks;
  for (const SweepRow& row : result->rows) risks.Add(row.risk);
  EXPECT_NEAR(risks.mean(), 0.15165, 4.0 * risks.standard_error());
}

TEST(ConsistencySweepTest, RejectsBadGrid) {
  SweepConfig config = SmallSweep("lipschitz-uniform");
  config.ns = {1024, 256};
  EXPECT_FALSE(ConsistencySweep(config).ok());
  config.ns = {};
  EXPECT_FALSE(ConsistencySweep(config).ok());
  config.ns = {256};
  config.jobs = 0;
  EXPECT_FALSE(ConsistencySweep(config).ok());
}

TEST(WriteSweepTest, WritesCsvAndSummary) {
  const SweepConfig config = SmallSweep("lipschitz-uniform");
  auto result = ConsistencySweep(config);
  ASSERT_TRUE(result.ok());
  const std::string prefix =
      (std::filesystem::path(::testing::TempDir()) / "sweep_out").string();
  ASSERT_TRUE(WriteSweep(*result, prefix).ok());
  auto csv = ReadFile(prefix + ".csv");
  ASSERT_TRUE(csv.ok());
  EXPECT_EQ(*csv, SweepCsv(*result));
  EXPECT_THAT(*csv, ::testing::StartsWith(
                        "n,seed,h_n,c_n,M_n,r_n,risk,std_error,condition_2d\n"
                        "256,1,"));
  auto json = ReadFile(prefix + ".json");
  ASSERT_TRUE(json.ok());
  const nlohmann::json summary = nlohmann::json::parse(*json);
  EXPECT_EQ(summary["kind"], "l2_regression");
  EXPECT_EQ(summary["medians"].size(), 2u);
}

}  // namespace
}  // namespace ldp_partition
