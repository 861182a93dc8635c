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

#ifndef LDP_PARTITION_EVALUATE_H_
#define LDP_PARTITION_EVALUATE_H_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "ldp_partition/collector.h"
#include "ldp_partition/dataset.h"
#include "ldp_partition/estimator.h"
#include "ldp_partition/internal/status_macros.h"
#include "ldp_partition/mechanism.h"
#include "ldp_partition/partition.h"
#include "ldp_partition/rng.h"
#include "ldp_partition/stats.h"
#include "ldp_partition/synthdata.h"

namespace ldp_partition {

enum class RiskKind { kL2Regression, kExcessClassification };

inline std::string_view RiskKindName(RiskKind kind) {
  return kind == RiskKind::kL2Regression ? "l2_regression"
                                         : "excess_classification";
}

// Monte-Carlo estimate of a risk integral against the law of X.
struct RiskReport {
  double point_estimate = 0.0;
  double std_error = 0.0;
  int64_t n_test = 0;
  RiskKind kind = RiskKind::kL2Regression;
};

namespace internal {

inline absl::Status ValidateRiskInputs(const Scenario& scenario,
                                       int64_t n_test) {
  if (n_test < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("n_test must be positive, got ", n_test));
  }
  if (!scenario.sample_x || !scenario.true_m) {
    return absl::InvalidArgumentError("scenario is missing its samplers");
  }
  return absl::OkStatus();
}

}  // namespace internal

// Mean of (m(X) - estimate(X))^2 over n_test fresh draws of X. `estimate` is
// any callable double(std::span<const double>).
template <typename Estimate>
absl::StatusOr<RiskReport> L2Risk(const Estimate& estimate,
                                  const Scenario& scenario, int64_t n_test,
                                  RngStream& rng) {
  LDP_RETURN_IF_ERROR(internal::ValidateRiskInputs(scenario, n_test));
  const std::vector<double> points =
      scenario.sample_x(rng, static_cast<size_t>(n_test));
  const size_t d = static_cast<size_t>(scenario.d);
  RunningStats losses;
  for (size_t i = 0; i < static_cast<size_t>(n_test); ++i) {
    std::span<const double> x(points.data() + i * d, d);
    const double error = scenario.true_m(x) - estimate(x);
    losses.Add(error * error);
  }
  return RiskReport{.point_estimate = losses.mean(),
                    .std_error = losses.standard_error(),
                    .n_test = n_test,
                    .kind = RiskKind::kL2Regression};
}

// Mean of 1{g(X) != g*(X)} |m(X)| over fresh draws, where g*(x) = sign m(x)
// with sign(0) = -1. `classifier` is a callable int(std::span<const double>)
// returning -1 or +1.
template <typename Classifier>
absl::StatusOr<RiskReport> ExcessClassRisk(const Classifier& classifier,
                                           const Scenario& scenario,
                                           int64_t n_test, RngStream& rng) {
  LDP_RETURN_IF_ERROR(internal::ValidateRiskInputs(scenario, n_test));
  if (!scenario.is_classification) {
    return absl::InvalidArgumentError(absl::StrCat(
        "scenario \"", scenario.name, "\" is not a classification scenario"));
  }
  const std::vector<double> points =
      scenario.sample_x(rng, static_cast<size_t>(n_test));
  const size_t d = static_cast<size_t>(scenario.d);
  RunningStats losses;
  for (size_t i = 0; i < static_cast<size_t>(n_test); ++i) {
    std::span<const double> x(points.data() + i * d, d);
    const double m = scenario.true_m(x);
    const int bayes = m > 0.0 ? 1 : -1;
    losses.Add(classifier(x) != bayes ? std::abs(m) : 0.0);
  }
  return RiskReport{.point_estimate = losses.mean(),
                    .std_error = losses.standard_error(),
                    .n_test = n_test,
                    .kind = RiskKind::kExcessClassification};
}

inline absl::StatusOr<RiskReport> ExcessClassRisk(const PrivateAggregate& agg,
                                                  const Scenario& scenario,
                                                  int64_t n_test,
                                                  RngStream& rng) {
  return ExcessClassRisk(
      [&agg](std::span<const double> x) { return Classify(agg, x); }, scenario,
      n_test, rng);
}

// ---------------------------------------------------------------------------
// Checks of the analytic facts behind the estimator.

struct TailCheck {
  double empirical_tail = 0.0;
  double bound = 0.0;
  bool pass = false;
};

// Frequency of |mean of n unit Laplace| >= eps over n_rep replicates against
// the bound 2 exp(-n eps^2 / 4), with one-sided slack 4 sqrt(bound/n_rep).
// Each replicate sums n individual draws.
inline absl::StatusOr<TailCheck> LemmaACheck(int64_t n, double eps,
                                             int64_t n_rep, RngStream& rng) {
  if (!(eps > 0.0) || !(eps < 2.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eps must lie in (0, 2), got ", eps));
  }
  if (n < 1 || n_rep < 1) {
    return absl::InvalidArgumentError("n and n_rep must be positive");
  }
  int64_t exceed = 0;
  for (int64_t rep = 0; rep < n_rep; ++rep) {
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) sum += SampleUnitLaplace(rng);
    if (std::abs(sum / static_cast<double>(n)) >= eps) ++exceed;
  }
  TailCheck check;
  check.empirical_tail =
      static_cast<double>(exceed) / static_cast<double>(n_rep);
  check.bound = 2.0 * std::exp(-static_cast<double>(n) * eps * eps / 4.0);
  check.pass = check.empirical_tail <=
               check.bound +
                   4.0 * std::sqrt(check.bound / static_cast<double>(n_rep));
  return check;
}

struct VarianceCheck {
  double lhs = 0.0;  // n Var(private cell mean)
  double rhs = 0.0;  // n Var(non-private cell mean) + sigma_z^2
  double rel_err = 0.0;
  bool pass = false;
};

inline constexpr double kVarianceIdentityTolerance = 0.1;

// Compares n Var(nu~_j) with n Var(nu_j) + sigma_z^2 over n_rep simulated
// datasets of size n. Both variances come from the same datasets; nu~_j adds
// the cell's summed Laplace noise (one Laplace-sum draw in fast mode, n
// individual draws in faithful mode).
inline absl::StatusOr<VarianceCheck> VarianceIdentityCheck(
    const Scenario& scenario, const CellTable& cells,
    const PrivacyParams& params, int64_t n, const CellId& cell, int64_t n_rep,
    RngStream& rng, AggregationMode mode = AggregationMode::kFast) {
  LDP_RETURN_IF_ERROR(ValidatePrivacyParams(params));
  if (n < 1 || n_rep < 2) {
    return absl::InvalidArgumentError("need n >= 1 and n_rep >= 2");
  }
  if (scenario.d != cells.d()) {
    return absl::InvalidArgumentError("scenario and partition dimensions differ");
  }
  if (!cells.Find(cell.coords).has_value()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "cell (", FormatCoords(cell.coords), ") is not enumerated"));
  }
  const uint64_t base = rng();
  const double dn = static_cast<double>(n);
  RunningStats private_means;
  RunningStats plain_means;
  for (int64_t rep = 0; rep < n_rep; ++rep) {
    RngStream stream = RngStream::Derive(
        base, {Tag(StreamPurpose::kReplicate), static_cast<uint64_t>(rep)});
    const Dataset data = scenario.sample_xy(stream, static_cast<size_t>(n));
    double sum = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
      LDP_ASSIGN_OR_RETURN(CellId at, Quantise(cells.spec(), data.point(i)));
      if (at == cell) {
        LDP_ASSIGN_OR_RETURN(double y, Truncate(data.y[i], params.m_trunc));
        sum += y;
      }
    }
    double noise = 0.0;
    if (mode == AggregationMode::kFast) {
      noise = SampleUnitLaplaceSum(stream, n);
    } else {
      for (int64_t i = 0; i < n; ++i) noise += SampleUnitLaplace(stream);
    }
    plain_means.Add(sum / dn);
    private_means.Add((sum + params.sigma_z * noise) / dn);
  }
  VarianceCheck check;
  check.lhs = dn * private_means.variance();
  check.rhs = dn * plain_means.variance() + params.sigma_z * params.sigma_z;
  if (check.rhs > 0.0) {
    check.rel_err = std::abs(check.lhs - check.rhs) / check.rhs;
  } else {
    check.rel_err =
        check.lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  check.pass = check.rel_err <= kVarianceIdentityTolerance;
  return check;
}

// ---------------------------------------------------------------------------
// Consistency sweeps.

struct SweepConfig {
  Scenario scenario;
  double alpha = 2.0;
  std::vector<int64_t> ns;
  std::vector<uint64_t> seeds;
  AggregationMode mode = AggregationMode::kFast;
  // sigma_w = sigma_z = 0, M = inf and c = log n / (n h^d): the non-private
  // partitioning estimate computed through the same pipeline.
  bool non_private = false;
  ScheduleOptions schedule;
  // Explicit values replacing the schedules.
  std::optional<double> h;
  std::optional<double> c;
  std::optional<double> m_trunc;
  std::optional<double> radius;
  int64_t n_test = 100000;
  uint64_t master_seed = 0;
  int jobs = 1;
};

struct SweepRow {
  int64_t n = 0;
  uint64_t seed = 0;
  double h = 0.0;
  double c = 0.0;
  double m_trunc = 0.0;
  double radius = 0.0;
  double risk = 0.0;
  double std_error = 0.0;
  double condition_2d = 0.0;
};

struct SweepMedian {
  int64_t n = 0;
  double median_risk = 0.0;
  double median_std_error = 0.0;
};

struct SweepResult {
  RiskKind kind = RiskKind::kL2Regression;
  std::vector<SweepRow> rows;  // n-major, seeds in the requested order
  std::vector<SweepMedian> medians;
  // Least-squares slope of log(median risk) against log(n); absent when a
  // median is not positive or fewer than two sample sizes were run.
  std::optional<double> loglog_slope;
};

// Seeds of the substreams used for one grid point.
struct SweepPointSeeds {
  uint64_t data;
  uint64_t noise;
  uint64_t risk;
};

inline SweepPointSeeds SeedsForSweepPoint(uint64_t master_seed, int64_t n,
                                          uint64_t seed) {
  const uint64_t job = DeriveSeed(
      master_seed,
      {Tag(StreamPurpose::kSweepJob), static_cast<uint64_t>(n), seed});
  return {DeriveSeed(job, {Tag(StreamPurpose::kData)}),
          DeriveSeed(job, {Tag(StreamPurpose::kAggregateNoise)}),
          DeriveSeed(job, {Tag(StreamPurpose::kRiskSample)})};
}

// Parameters actually used at sample size n after overrides.
struct SweepPointPlan {
  ScheduleReport schedule;
  PrivacyParams params;
};

inline absl::StatusOr<SweepPointPlan> PlanSweepPoint(const SweepConfig& config,
                                                     int64_t n) {
  const int d = config.scenario.d;
  LDP_ASSIGN_OR_RETURN(ScheduleReport schedule,
                       Schedules(n, d, config.schedule));
  if (config.h) schedule.h = *config.h;
  if (config.radius) schedule.radius = *config.radius;
  if (config.m_trunc) schedule.m_trunc = *config.m_trunc;
  if (config.c) schedule.c = *config.c;
  SweepPointPlan plan;
  if (config.non_private) {
    schedule.m_trunc = std::numeric_limits<double>::infinity();
    if (!config.c) {
      schedule.c = std::log(static_cast<double>(n)) /
                   (static_cast<double>(n) * std::pow(schedule.h, d));
    }
    plan.params = PrivacyParams{.alpha = config.alpha,
                                .sigma_w = 0.0,
                                .sigma_z = 0.0,
                                .m_trunc = schedule.m_trunc};
  } else {
    LDP_ASSIGN_OR_RETURN(plan.params,
                         Calibrate(config.alpha, schedule.m_trunc));
  }
  schedule.condition_2d = ConsistencyCondition2d(n, d, schedule.c, schedule.h);
  schedule.class_condition = ClassificationCondition(n, d, schedule.h);
  plan.schedule = schedule;
  return plan;
}

// One grid point: sample, privatise, aggregate, fit and evaluate.
inline absl::StatusOr<SweepRow> RunSweepPoint(const SweepConfig& config,
                                              int64_t n, uint64_t seed) {
  LDP_ASSIGN_OR_RETURN(SweepPointPlan plan, PlanSweepPoint(config, n));
  const ScheduleReport& schedule = plan.schedule;
  const SweepPointSeeds seeds = SeedsForSweepPoint(config.master_seed, n, seed);
  const PartitionSpec spec{
      .h = schedule.h, .d = config.scenario.d, .radius = schedule.radius};
  LDP_ASSIGN_OR_RETURN(CellTable table, CellTable::Create(spec));
  auto cells = std::make_shared<const CellTable>(std::move(table));

  RngStream data_rng(seeds.data);
  const Dataset data = config.scenario.sample_xy(data_rng, static_cast<size_t>(n));
  PrivateAggregate agg;
  if (config.mode == AggregationMode::kFast) {
    RngStream noise_rng(seeds.noise);
    LDP_ASSIGN_OR_RETURN(agg, AggregateFast(cells, plan.params, data, noise_rng));
  } else {
    LDP_ASSIGN_OR_RETURN(
        agg, PrivatizeAndAggregate(cells, plan.params, data, seeds.noise));
  }

  RngStream risk_rng(seeds.risk);
  RiskReport risk;
  if (config.scenario.is_classification) {
    LDP_ASSIGN_OR_RETURN(
        risk, ExcessClassRisk(agg, config.scenario, config.n_test, risk_rng));
  } else {
    LDP_ASSIGN_OR_RETURN(RegressionEstimate estimate,
                         FitPrivateRegression(agg, schedule.c));
    LDP_ASSIGN_OR_RETURN(
        risk, L2Risk(estimate, config.scenario, config.n_test, risk_rng));
  }
  return SweepRow{.n = n,
                  .seed = seed,
                  .h = schedule.h,
                  .c = schedule.c,
                  .m_trunc = schedule.m_trunc,
                  .radius = schedule.radius,
                  .risk = risk.point_estimate,
                  .std_error = risk.std_error,
                  .condition_2d = schedule.condition_2d};
}

// Runs every (n, seed) grid point, on up to `jobs` threads. Each point uses
// its own substreams, so the result does not depend on the job count.
inline absl::StatusOr<SweepResult> ConsistencySweep(const SweepConfig& config) {
  if (config.ns.empty() || config.seeds.empty()) {
    return absl::InvalidArgumentError("ns and seeds must be non-empty");
  }
  for (size_t i = 0; i < config.ns.size(); ++i) {
    if (config.ns[i] < 2 || (i > 0 && config.ns[i] <= config.ns[i - 1])) {
      return absl::InvalidArgumentError(
          "ns must be strictly increasing and at least 2");
    }
  }
  if (config.jobs < 1) {
    return absl::InvalidArgumentError("jobs must be at least 1");
  }
  const size_t n_seeds = config.seeds.size();
  const size_t total = config.ns.size() * n_seeds;
  std::vector<absl::StatusOr<SweepRow>> results(
      total, absl::UnknownError("not run"));
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t index = next++; index < total; index = next++) {
      results[index] = RunSweepPoint(config, config.ns[index / n_seeds],
                                     config.seeds[index % n_seeds]);
    }
  };
  const size_t n_threads =
      std::min(static_cast<size_t>(config.jobs), total);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }

  SweepResult result;
  result.kind = config.scenario.is_classification
                    ? RiskKind::kExcessClassification
                    : RiskKind::kL2Regression;
  result.rows.reserve(total);
  for (absl::StatusOr<SweepRow>& row : results) {
    if (!row.ok()) return row.status();
    result.rows.push_back(*row);
  }
  bool all_positive = true;
  for (size_t k = 0; k < config.ns.size(); ++k) {
    std::vector<double> risks, errors;
    for (size_t s = 0; s < n_seeds; ++s) {
      risks.push_back(result.rows[k * n_seeds + s].risk);
      errors.push_back(result.rows[k * n_seeds + s].std_error);
    }
    SweepMedian median{.n = config.ns[k],
                       .median_risk = Median(risks),
                       .median_std_error = Median(errors)};
    all_positive = all_positive && median.median_risk > 0.0;
    result.medians.push_back(median);
  }
  if (all_positive && result.medians.size() >= 2) {
    double mean_x = 0.0, mean_y = 0.0;
    for (const SweepMedian& m : result.medians) {
      mean_x += std::log(static_cast<double>(m.n));
      mean_y += std::log(m.median_risk);
    }
    mean_x /= static_cast<double>(result.medians.size());
    mean_y /= static_cast<double>(result.medians.size());
    double sxy = 0.0, sxx = 0.0;
    for (const SweepMedian& m : result.medians) {
      const double dx = std::log(static_cast<double>(m.n)) - mean_x;
      sxy += dx * (std::log(m.median_risk) - mean_y);
      sxx += dx * dx;
    }
    result.loglog_slope = sxy / sxx;
  }
  return result;
}

inline constexpr std::string_view kSweepCsvHeader =
    "n,seed,h_n,c_n,M_n,r_n,risk,std_error,condition_2d";

inline std::string SweepCsv(const SweepResult& result) {
  std::string csv = absl::StrCat(std::string(kSweepCsvHeader), "\n");
  for (const SweepRow& row : result.rows) {
    absl::StrAppend(&csv, row.n, ",", row.seed, ",", FormatDouble(row.h), ",",
                    FormatDouble(row.c), ",", FormatDouble(row.m_trunc), ",",
                    FormatDouble(row.radius), ",", FormatDouble(row.risk), ",",
                    FormatDouble(row.std_error), ",",
                    FormatDouble(row.condition_2d), "\n");
  }
  return csv;
}

inline nlohmann::json SweepSummaryJson(const SweepResult& result) {
  nlohmann::json medians = nlohmann::json::array();
  for (const SweepMedian& m : result.medians) {
    medians.push_back({{"n", m.n},
                       {"median_risk", m.median_risk},
                       {"median_std_error", m.median_std_error}});
  }
  nlohmann::json summary{{"kind", std::string(RiskKindName(result.kind))},
                         {"medians", medians}};
  summary["loglog_slope"] = result.loglog_slope.has_value()
                                ? nlohmann::json(*result.loglog_slope)
                                : nlohmann::json(nullptr);
  return summary;
}

// Writes <prefix>.csv (one row per grid point) and <prefix>.json (per-n
// medians).
inline absl::Status WriteSweep(const SweepResult& result,
                               std::string_view prefix) {
  const PublishedPaths paths = PathsForPrefix(prefix);
  LDP_RETURN_IF_ERROR(WriteFileAtomically(paths.csv, SweepCsv(result)));
  return WriteFileAtomically(paths.sidecar,
                             SweepSummaryJson(result).dump(2) + "\n");
}

}  // namespace ldp_partition

#endif  // LDP_PARTITION_EVALUATE_H_
