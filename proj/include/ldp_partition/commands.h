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

// The five subcommands behind the ldp-partition binary. Each returns a
// process exit code (see ExitCode) and writes a human-readable report.

#ifndef LDP_PARTITION_COMMANDS_H_
#define LDP_PARTITION_COMMANDS_H_

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "ldp_partition/collector.h"
#include "ldp_partition/config.h"
#include "ldp_partition/estimator.h"
#include "ldp_partition/evaluate.h"
#include "ldp_partition/internal/status_macros.h"
#include "ldp_partition/mechanism.h"
#include "ldp_partition/partition.h"
#include "ldp_partition/rng.h"
#include "ldp_partition/synthdata.h"

namespace ldp_partition {

// Budget slack used when comparing log ratios against alpha.
inline constexpr double kLogRatioTolerance = 1e-9;

inline constexpr int64_t kTailGridN[] = {10, 100, 1000};
inline constexpr double kTailGridEps[] = {0.25, 0.5, 1.0, 1.9};

namespace internal {

inline absl::StatusOr<Scenario> ScenarioFor(const ExperimentConfig& config) {
  return MakeScenario(config.scenario, config.d,
                      {.atom_weight = config.atom_weight,
                       .noise_scale = config.noise_scale});
}

inline absl::StatusOr<SweepConfig> SweepConfigFor(
    const ExperimentConfig& config) {
  SweepConfig sweep;
  LDP_ASSIGN_OR_RETURN(sweep.scenario, ScenarioFor(config));
  LDP_ASSIGN_OR_RETURN(sweep.master_seed, ResolveMasterSeed(config));
  sweep.alpha = config.alpha;
  sweep.ns = config.ns;
  sweep.seeds = config.seeds;
  sweep.mode = config.mode;
  sweep.non_private = config.non_private;
  sweep.schedule = {.c_prime = config.c_prime,
                    .m_scale = config.m_scale,
                    .r_scale = config.r_scale};
  sweep.h = config.h;
  sweep.c = config.c;
  sweep.m_trunc = config.m_trunc;
  sweep.radius = config.radius;
  sweep.n_test = config.n_test;
  sweep.jobs = config.jobs;
  return sweep;
}

// Schedules and privacy parameters at sample size n, after every override.
inline absl::StatusOr<SweepPointPlan> PlanFor(const ExperimentConfig& config,
                                              int64_t n) {
  LDP_ASSIGN_OR_RETURN(SweepConfig sweep, SweepConfigFor(config));
  LDP_ASSIGN_OR_RETURN(SweepPointPlan plan, PlanSweepPoint(sweep, n));
  if (config.sigma_w) plan.params.sigma_w = *config.sigma_w;
  if (config.sigma_z) plan.params.sigma_z = *config.sigma_z;
  return plan;
}

inline absl::StatusOr<std::shared_ptr<const CellTable>> CellsFor(
    const ExperimentConfig& config, const ScheduleReport& schedule) {
  LDP_ASSIGN_OR_RETURN(
      CellTable table,
      CellTable::Create(
          {.h = schedule.h, .d = config.d, .radius = schedule.radius},
          config.max_cells));
  return std::make_shared<const CellTable>(std::move(table));
}

inline int Fail(const absl::Status& status, std::ostream& err) {
  err << "error: " << status << "\n";
  return ExitCodeForStatus(status);
}

inline std::string PassFail(bool pass) { return pass ? "PASS" : "FAIL"; }

}  // namespace internal

// Like LDP_ASSIGN_OR_RETURN, but reports the error and returns its exit code.
#define LDP_CMD_ASSIGN_OR_FAIL(lhs, rexpr, err) \
  LDP_CMD_ASSIGN_OR_FAIL_IMPL(LDP_STATUS_CONCAT(_ldp_cmd_, __LINE__), lhs, \
                              rexpr, err)
#define LDP_CMD_ASSIGN_OR_FAIL_IMPL(statusor, lhs, rexpr, err)           \
  auto statusor = (rexpr);                                               \
  if (!statusor.ok()) {                                                  \
    return ::ldp_partition::internal::Fail(statusor.status(), err);     \
  }                                                                      \
  lhs = std::move(statusor).value()

// Samples n records, privatises them and publishes the aggregate to <out>.
inline int CmdPrivatize(const ExperimentConfig& config, std::ostream& out,
                        std::ostream& err) {
  if (config.out.empty()) {
    return internal::Fail(absl::InvalidArgumentError("privatize needs --out"),
                          err);
  }
  LDP_CMD_ASSIGN_OR_FAIL(const uint64_t seed, ResolveMasterSeed(config), err);
  LDP_CMD_ASSIGN_OR_FAIL(const Scenario scenario,
                         internal::ScenarioFor(config), err);
  LDP_CMD_ASSIGN_OR_FAIL(const SweepPointPlan plan,
                         internal::PlanFor(config, config.n), err);
  LDP_CMD_ASSIGN_OR_FAIL(auto cells, internal::CellsFor(config, plan.schedule),
                         err);

  RngStream data_rng =
      RngStream::Derive(seed, {Tag(StreamPurpose::kData)});
  const Dataset data =
      scenario.sample_xy(data_rng, static_cast<size_t>(config.n));
  absl::StatusOr<PrivateAggregate> agg;
  if (config.mode == AggregationMode::kFast) {
    RngStream noise_rng =
        RngStream::Derive(seed, {Tag(StreamPurpose::kAggregateNoise)});
    agg = AggregateFast(cells, plan.params, data, noise_rng);
  } else {
    agg = PrivatizeAndAggregate(cells, plan.params, data,
                                DeriveSeed(seed, {Tag(StreamPurpose::kMechanism)}),
                                {.compensated_sum = config.compensated_sum});
  }
  if (!agg.ok()) return internal::Fail(agg.status(), err);
  // Every stream above derives from the master seed.
  agg->seed = seed;
  if (absl::Status s = Publish(*agg, config.out); !s.ok()) {
    return internal::Fail(s, err);
  }
  const PublishedPaths paths = PathsForPrefix(config.out);
  out << "published " << paths.csv << " and " << paths.sidecar << ": n="
      << config.n << " cells=" << cells->size()
      << " h=" << FormatDouble(plan.schedule.h)
      << " M=" << FormatDouble(plan.params.m_trunc)
      << " sigma_w=" << FormatDouble(plan.params.sigma_w)
      << " sigma_z=" << FormatDouble(plan.params.sigma_z)
      << " mode=" << ModeName(config.mode) << "\n";
  return kExitOk;
}

// Loads the aggregate at <input> and writes the estimate table to <out>.csv.
// The threshold is --c, else the schedule value 1/sqrt(log n).
inline int CmdEstimate(const ExperimentConfig& config, std::ostream& out,
                       std::ostream& err) {
  if (config.input.empty() || config.out.empty()) {
    return internal::Fail(
        absl::InvalidArgumentError("estimate needs --input and --out"), err);
  }
  LDP_CMD_ASSIGN_OR_FAIL(const PrivateAggregate agg,
                         Load(config.input, config.max_cells), err);
  double c = 0.0;
  if (config.c) {
    c = *config.c;
  } else {
    LDP_CMD_ASSIGN_OR_FAIL(
        const ScheduleReport schedule,
        Schedules(agg.n, agg.spec().d,
                  {.c_prime = config.c_prime,
                   .m_scale = config.m_scale,
                   .r_scale = config.r_scale}),
        err);
    c = schedule.c;
  }
  LDP_CMD_ASSIGN_OR_FAIL(const RegressionEstimate estimate,
                         FitPrivateRegression(agg, c), err);
  const std::string path = PathsForPrefix(config.out).csv;
  if (absl::Status s = ExportEstimateCsv(estimate, path); !s.ok()) {
    return internal::Fail(s, err);
  }
  size_t occupied = 0;
  for (double v : estimate.values()) occupied += v != 0.0;
  out << "wrote " << path << ": cells=" << estimate.values().size()
      << " nonzero=" << occupied << " c=" << FormatDouble(c)
      << " threshold=" << FormatDouble(estimate.occupancy_threshold()) << "\n";
  return kExitOk;
}

inline int CmdSweep(const ExperimentConfig& config, std::ostream& out,
                    std::ostream& err) {
  LDP_CMD_ASSIGN_OR_FAIL(const SweepConfig sweep,
                         internal::SweepConfigFor(config), err);
  LDP_CMD_ASSIGN_OR_FAIL(const SweepResult result, ConsistencySweep(sweep),
                         err);
  if (!config.out.empty()) {
    if (absl::Status s = WriteSweep(result, config.out); !s.ok()) {
      return internal::Fail(s, err);
    }
  }
  out << RiskKindName(result.kind) << " sweep, scenario " << config.scenario
      << ", " << config.seeds.size() << " seeds\n";
  for (const SweepMedian& m : result.medians) {
    out << "  n=" << m.n << " median_risk=" << FormatDouble(m.median_risk)
        << " median_std_error=" << FormatDouble(m.median_std_error) << "\n";
  }
  if (result.loglog_slope) {
    out << "  log-log slope " << FormatDouble(*result.loglog_slope) << "\n";
  }
  return kExitOk;
}

// Privacy and concentration audit at sample size n:
//   1. sampled log density ratios and the worst-case construction <= alpha;
//   2. the Laplace-mean tail bound on the fixed (n, eps) grid;
//   3. the variance identity in the most populated cell of a pilot sample.
// Exit code 3 if any check fails. With sigma = 0 the ratio checks are
// vacuous: no privacy is claimed.
inline int CmdAudit(const ExperimentConfig& config, std::ostream& out,
                    std::ostream& err) {
  LDP_CMD_ASSIGN_OR_FAIL(const uint64_t seed, ResolveMasterSeed(config), err);
  LDP_CMD_ASSIGN_OR_FAIL(const Scenario scenario,
                         internal::ScenarioFor(config), err);
  LDP_CMD_ASSIGN_OR_FAIL(const SweepPointPlan plan,
                         internal::PlanFor(config, config.n), err);
  LDP_CMD_ASSIGN_OR_FAIL(auto cells, internal::CellsFor(config, plan.schedule),
                         err);
  const PrivacyParams& params = plan.params;
  const uint64_t audit_seed = DeriveSeed(seed, {Tag(StreamPurpose::kAudit)});
  nlohmann::json report;
  bool all_pass = true;

  if (params.sigma_w == 0.0 || params.sigma_z == 0.0) {
    out << "PASS log-ratio: noiseless parameters, no privacy claim to check\n";
    report["log_ratio"] = {{"pass", true}, {"skipped", true}};
  } else {
    RngStream rng = RngStream::Derive(audit_seed, {1});
    LDP_CMD_ASSIGN_OR_FAIL(
        const RatioAudit sampled,
        AuditLogRatios(*cells, params, config.audit_tuples, rng), err);
    LDP_CMD_ASSIGN_OR_FAIL(const double worst,
                           WorstCaseLogRatio(*cells, params), err);
    const double limit = config.alpha + kLogRatioTolerance;
    const bool sampled_pass = sampled.max_log_ratio <= limit;
    const bool worst_pass = worst <= limit;
    all_pass = all_pass && sampled_pass && worst_pass;
    out << internal::PassFail(sampled_pass) << " log-ratio sampled: max "
        << FormatDouble(sampled.max_log_ratio) << " over " << sampled.tuples
        << " tuples, alpha " << FormatDouble(config.alpha) << "\n";
    out << internal::PassFail(worst_pass) << " log-ratio worst case: "
        << FormatDouble(worst) << ", bound "
        << FormatDouble(PrivacyLossBound(params)) << ", alpha "
        << FormatDouble(config.alpha) << "\n";
    report["log_ratio"] = {{"pass", sampled_pass && worst_pass},
                           {"sampled_max", sampled.max_log_ratio},
                           {"tuples", sampled.tuples},
                           {"worst_case", worst},
                           {"bound", PrivacyLossBound(params)},
                           {"alpha", config.alpha}};
  }

  nlohmann::json grid = nlohmann::json::array();
  bool grid_pass = true;
  uint64_t point = 0;
  for (int64_t n : kTailGridN) {
    for (double eps : kTailGridEps) {
      RngStream rng = RngStream::Derive(audit_seed, {2, point++});
      LDP_CMD_ASSIGN_OR_FAIL(const TailCheck tail,
                             LemmaACheck(n, eps, config.audit_tail_reps, rng),
                             err);
      grid_pass = grid_pass && tail.pass;
      grid.push_back({{"n", n},
                      {"eps", eps},
                      {"empirical_tail", tail.empirical_tail},
                      {"bound", tail.bound},
                      {"pass", tail.pass}});
      if (!tail.pass) {
        out << "  tail bound violated at n=" << n << " eps=" << eps << ": "
            << FormatDouble(tail.empirical_tail) << " > "
            << FormatDouble(tail.bound) << "\n";
      }
    }
  }
  all_pass = all_pass && grid_pass;
  out << internal::PassFail(grid_pass) << " tail bound: " << grid.size()
      << " grid points, " << config.audit_tail_reps << " replicates each\n";
  report["tail_bound"] = {{"pass", grid_pass}, {"grid", grid}};

  // Pilot sample to pick the most populated cell.
  RngStream pilot_rng = RngStream::Derive(audit_seed, {3});
  const Dataset pilot =
      scenario.sample_xy(pilot_rng, static_cast<size_t>(config.n));
  std::map<CellId, int64_t> counts;
  for (size_t i = 0; i < pilot.size(); ++i) {
    LDP_CMD_ASSIGN_OR_FAIL(CellId cell,
                           Quantise(cells->spec(), pilot.point(i)), err);
    if (cells->Find(cell.coords).has_value()) ++counts[cell];
  }
  CellId busiest = cells->cell(0);
  int64_t best = -1;
  for (const auto& [cell, count] : counts) {
    if (count > best) {
      best = count;
      busiest = cell;
    }
  }
  RngStream variance_rng = RngStream::Derive(audit_seed, {4});
  LDP_CMD_ASSIGN_OR_FAIL(
      const VarianceCheck variance,
      VarianceIdentityCheck(scenario, *cells, params, config.n, busiest,
                            config.audit_variance_reps, variance_rng,
                            config.mode),
      err);
  all_pass = all_pass && variance.pass;
  out << internal::PassFail(variance.pass) << " variance identity in cell ("
      << FormatCoords(busiest.coords) << "): lhs " << FormatDouble(variance.lhs)
      << ", rhs " << FormatDouble(variance.rhs) << ", relative error "
      << FormatDouble(variance.rel_err) << "\n";
  report["variance_identity"] = {{"pass", variance.pass},
                                 {"cell", FormatCoords(busiest.coords)},
                                 {"lhs", variance.lhs},
                                 {"rhs", variance.rhs},
                                 {"rel_err", variance.rel_err}};
  report["pass"] = all_pass;

  if (!config.out.empty()) {
    if (absl::Status s = WriteFileAtomically(PathsForPrefix(config.out).sidecar,
                                             report.dump(2) + "\n");
        !s.ok()) {
      return internal::Fail(s, err);
    }
  }
  out << (all_pass ? "audit passed" : "audit FAILED") << "\n";
  return all_pass ? kExitOk : kExitPropertyFailure;
}

// Validates the config and prints the schedules at n and at every ns.
inline int CmdCheck(const ExperimentConfig& config, std::ostream& out,
                    std::ostream& err) {
  std::vector<int64_t> sizes{config.n};
  for (int64_t n : config.ns) {
    if (n != config.n) sizes.push_back(n);
  }
  for (int64_t n : sizes) {
    LDP_CMD_ASSIGN_OR_FAIL(const SweepPointPlan plan,
                           internal::PlanFor(config, n), err);
    LDP_CMD_ASSIGN_OR_FAIL(auto cells, internal::CellsFor(config, plan.schedule),
                           err);
    const ScheduleReport& s = plan.schedule;
    out << "n=" << n << " h=" << FormatDouble(s.h) << " c=" << FormatDouble(s.c)
        << " M=" << FormatDouble(s.m_trunc) << " r=" << FormatDouble(s.radius)
        << " cells=" << cells->size()
        << " sigma_w=" << FormatDouble(plan.params.sigma_w)
        << " sigma_z=" << FormatDouble(plan.params.sigma_z)
        << " condition_2d=" << FormatDouble(s.condition_2d)
        << " class_condition=" << FormatDouble(s.class_condition) << "\n";
  }
  out << "config ok\n";
  return kExitOk;
}

}  // namespace ldp_partition

#endif  // LDP_PARTITION_COMMANDS_H_
