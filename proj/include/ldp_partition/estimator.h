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

#ifndef LDP_PARTITION_ESTIMATOR_H_
#define LDP_PARTITION_ESTIMATOR_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "ldp_partition/collector.h"
#include "ldp_partition/dataset.h"
#include "ldp_partition/internal/status_macros.h"
#include "ldp_partition/mechanism.h"
#include "ldp_partition/partition.h"

namespace ldp_partition {

// Piecewise-constant regression estimate over the enumerated cells. Points
// outside every enumerated cell evaluate to 0.
class RegressionEstimate {
 public:
  RegressionEstimate(std::shared_ptr<const CellTable> cells,
                     std::vector<double> values, double occupancy_threshold)
      : cells_(std::move(cells)),
        values_(std::move(values)),
        occupancy_threshold_(occupancy_threshold) {}

  double Evaluate(std::span<const double> x) const {
    const std::optional<size_t> j = cells_->Locate(x);
    return j.has_value() ? values_[*j] : 0.0;
  }

  double operator()(std::span<const double> x) const { return Evaluate(x); }

  const CellTable& cells() const { return *cells_; }
  std::span<const double> values() const { return values_; }
  // Occupancy level (c h^d for the private estimate) below which a cell is
  // set to 0.
  double occupancy_threshold() const { return occupancy_threshold_; }

 private:
  std::shared_ptr<const CellTable> cells_;
  std::vector<double> values_;
  double occupancy_threshold_;
};

inline double EvaluateRegression(const RegressionEstimate& estimate,
                                 std::span<const double> x) {
  return estimate.Evaluate(x);
}

// m(x) = nu_j / mu_j if mu_j >= c h^d, else 0, for x in A_j.
inline absl::StatusOr<RegressionEstimate> FitPrivateRegression(
    const PrivateAggregate& agg, double c_threshold) {
  if (!(c_threshold > 0.0) || !std::isfinite(c_threshold)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "threshold constant must be positive and finite, got ", c_threshold));
  }
  if (agg.cells == nullptr || agg.nu_tilde.size() != agg.cells->size() ||
      agg.mu_tilde.size() != agg.cells->size()) {
    return absl::InvalidArgumentError(
        "aggregate vectors do not match its cell table");
  }
  const PartitionSpec& spec = agg.spec();
  const double threshold = c_threshold * std::pow(spec.h, spec.d);
  std::vector<double> values(agg.num_cells(), 0.0);
  for (size_t j = 0; j < values.size(); ++j) {
    if (agg.mu_tilde[j] >= threshold) {
      values[j] = agg.nu_tilde[j] / agg.mu_tilde[j];
    }
  }
  return RegressionEstimate(agg.cells, std::move(values), threshold);
}

// Non-private partitioning estimate nu_n/mu_n with occupancy threshold
// log(n)/n, restricted to the enumerated cells of `spec`. Responses are
// truncated at m_trunc when it is finite.
inline absl::StatusOr<RegressionEstimate> FitNonprivateBaseline(
    const Dataset& data, std::shared_ptr<const CellTable> cells,
    double m_trunc = std::numeric_limits<double>::infinity()) {
  if (cells == nullptr) return absl::InvalidArgumentError("cell table is required");
  if (data.size() == 0) {
    return absl::InvalidArgumentError("at least one observation is required");
  }
  if (!(m_trunc > 0.0)) {
    return absl::InvalidArgumentError("truncation level must be positive");
  }
  std::vector<double> response_sums(cells->size(), 0.0);
  std::vector<double> counts(cells->size(), 0.0);
  for (size_t i = 0; i < data.size(); ++i) {
    LDP_ASSIGN_OR_RETURN(double y, Truncate(data.y[i], m_trunc));
    LDP_ASSIGN_OR_RETURN(CellId cell, Quantise(cells->spec(), data.point(i)));
    if (std::optional<size_t> j = cells->Find(cell.coords); j.has_value()) {
      response_sums[*j] += y;
      counts[*j] += 1.0;
    }
  }
  const double n = static_cast<double>(data.size());
  const double threshold = std::log(n) / n;
  std::vector<double> values(cells->size(), 0.0);
  for (size_t j = 0; j < values.size(); ++j) {
    const double nu = response_sums[j] / n;
    const double mu = counts[j] / n;
    if (mu >= threshold && mu > 0.0) values[j] = nu / mu;
  }
  return RegressionEstimate(std::move(cells), std::move(values), threshold);
}

inline absl::StatusOr<RegressionEstimate> FitNonprivateBaseline(
    const Dataset& data, const PartitionSpec& spec,
    double m_trunc = std::numeric_limits<double>::infinity()) {
  LDP_ASSIGN_OR_RETURN(CellTable table, CellTable::Create(spec));
  return FitNonprivateBaseline(
      data, std::make_shared<const CellTable>(std::move(table)), m_trunc);
}

// sign(nu_j) for x in A_j, with sign(z) = -1 for z <= 0. Cells outside the
// enumeration count as nu = 0. The occupancy estimates are not used.
inline int Classify(const PrivateAggregate& agg, std::span<const double> x) {
  const std::optional<size_t> j = agg.cells->Locate(x);
  if (!j.has_value()) return -1;
  return agg.nu_tilde[*j] > 0.0 ? 1 : -1;
}

// Parameter schedules for sample size n and the two consistency diagnostics.
struct ScheduleReport {
  int64_t n = 0;
  double h = 0.0;
  double c = 0.0;
  double m_trunc = 0.0;
  double radius = 0.0;
  // (log n)^3 / (n c^2 h^{2d}); must tend to 0 for the regression estimate.
  double condition_2d = 0.0;
  // log n / (n h^{2d}); must tend to 0 for the classifier.
  double class_condition = 0.0;
};

struct ScheduleOptions {
  double c_prime = 1.0;
  double m_scale = 1.0;
  double r_scale = 1.0;
};

inline double ConsistencyCondition2d(int64_t n, int d, double c, double h) {
  const double log_n = std::log(static_cast<double>(n));
  return log_n * log_n * log_n /
         (static_cast<double>(n) * c * c * std::pow(h, 2.0 * d));
}

inline double ClassificationCondition(int64_t n, int d, double h) {
  return std::log(static_cast<double>(n)) /
         (static_cast<double>(n) * std::pow(h, 2.0 * d));
}

// h_n = c' n^{-1/(2(d+1))}, c_n = 1/sqrt(log n), M_n = m_scale sqrt(log n),
// r_n = r_scale log(1 + n).
inline absl::StatusOr<ScheduleReport> Schedules(int64_t n, int d,
                                                const ScheduleOptions& options) {
  if (n < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("schedules need n >= 2, got ", n));
  }
  if (d < 1) {
    return absl::InvalidArgumentError(absl::StrCat("d must be >= 1, got ", d));
  }
  if (!(options.c_prime > 0.0) || !(options.m_scale > 0.0) ||
      !(options.r_scale > 0.0)) {
    return absl::InvalidArgumentError(
        "c_prime, m_scale and r_scale must be positive");
  }
  const double dn = static_cast<double>(n);
  const double log_n = std::log(dn);
  ScheduleReport report;
  report.n = n;
  report.h = options.c_prime * std::pow(dn, -1.0 / (2.0 * (d + 1)));
  report.c = 1.0 / std::sqrt(log_n);
  report.m_trunc = options.m_scale * std::sqrt(log_n);
  report.radius = options.r_scale * std::log1p(dn);
  report.condition_2d = ConsistencyCondition2d(n, d, report.c, report.h);
  report.class_condition = ClassificationCondition(n, d, report.h);
  return report;
}

inline std::string EstimateCsv(const RegressionEstimate& estimate) {
  std::string csv = "j,cell_coords,value\n";
  for (size_t j = 0; j < estimate.values().size(); ++j) {
    absl::StrAppend(&csv, j + 1, ",\"",
                    FormatCoords(estimate.cells().coords(j)), "\",",
                    FormatDouble(estimate.values()[j]), "\n");
  }
  return csv;
}

inline absl::Status ExportEstimateCsv(const RegressionEstimate& estimate,
                                      const std::string& path) {
  return WriteFileAtomically(path, EstimateCsv(estimate));
}

}  // namespace ldp_partition

#endif  // LDP_PARTITION_ESTIMATOR_H_
