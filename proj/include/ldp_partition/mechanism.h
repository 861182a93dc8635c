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

#ifndef LDP_PARTITION_MECHANISM_H_
#define LDP_PARTITION_MECHANISM_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "ldp_partition/partition.h"
#include "ldp_partition/rng.h"

namespace ldp_partition {

// Noise scales and truncation level of the per-individual mechanism
//
//   W_j = 1{x in A_j} + sigma_w * zeta_j,
//   Z_j = [y]_{-M}^{M} 1{x in A_j} + sigma_z * eps_j,   j = 1..N,
//
// with zeta, eps i.i.d. centred unit-variance Laplace. The mechanism is
// alpha-LDP whenever 2^{3/2} (1/sigma_w + M/sigma_z) <= alpha.
//
// sigma_w = sigma_z = 0 is accepted as a noiseless audit mode (no privacy),
// and m_trunc may be +inf to disable truncation.
struct PrivacyParams {
  double alpha = 1.0;
  double sigma_w = 0.0;
  double sigma_z = 0.0;
  double m_trunc = 1.0;
};

inline absl::Status ValidatePrivacyParams(const PrivacyParams& params) {
  if (!(params.alpha > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must be positive, got ", params.alpha));
  }
  if (!(params.sigma_w >= 0.0) || !std::isfinite(params.sigma_w) ||
      !(params.sigma_z >= 0.0) || !std::isfinite(params.sigma_z)) {
    return absl::InvalidArgumentError(
        absl::StrCat("noise scales must be non-negative and finite, got sigma_w=",
                     params.sigma_w, " sigma_z=", params.sigma_z));
  }
  if (!(params.m_trunc > 0.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "truncation level must be positive, got ", params.m_trunc));
  }
  return absl::OkStatus();
}

// log of the worst-case density ratio, 2^{3/2}/sigma_w + 2^{3/2} M/sigma_z.
// Infinite when either noise scale is zero.
inline double PrivacyLossBound(const PrivacyParams& params) {
  constexpr double kTwoToThreeHalves = 2.0 * std::numbers::sqrt2;
  if (params.sigma_w == 0.0 || params.sigma_z == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return kTwoToThreeHalves / params.sigma_w +
         kTwoToThreeHalves * params.m_trunc / params.sigma_z;
}

inline bool SatisfiesBudget(const PrivacyParams& params,
                            double relative_slack = 1e-12) {
  return PrivacyLossBound(params) <= params.alpha * (1.0 + relative_slack);
}

// sigma_w^2 = 32/alpha^2 and sigma_z^2 = 32 M^2/alpha^2, which meets the
// budget with equality.
inline absl::StatusOr<PrivacyParams> Calibrate(double alpha, double m_trunc) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must be positive and finite, got ", alpha));
  }
  if (!(m_trunc > 0.0) || !std::isfinite(m_trunc)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "truncation level must be positive and finite, got ", m_trunc));
  }
  const double root32 = std::sqrt(32.0);
  return PrivacyParams{.alpha = alpha,
                       .sigma_w = root32 / alpha,
                       .sigma_z = root32 * m_trunc / alpha,
                       .m_trunc = m_trunc};
}

inline absl::StatusOr<double> Truncate(double y, double m_trunc) {
  if (std::isnan(y) || std::isinf(y)) {
    return absl::InvalidArgumentError(absl::StrCat("non-finite response ", y));
  }
  return std::clamp(y, -m_trunc, m_trunc);
}

// Centred Laplace draw with unit variance (density exp(-sqrt2 |x|)/sqrt2),
// by inverting the CDF at a single uniform.
inline double SampleUnitLaplace(RngStream& rng) {
  constexpr double kScale = 1.0 / std::numbers::sqrt2;
  const double v = rng.UniformOpen01() - 0.5;
  return -kScale * std::copysign(std::log1p(-2.0 * std::abs(v)), v);
}

// One individual's transmitted vectors over the N enumerated cells.
struct PrivateRecord {
  std::vector<double> w;
  std::vector<double> z;
};

// Draws the record for one individual. The noise for all N cells is always
// drawn (w noise for every cell first, then z noise), including when a
// noise scale is zero, so the stream consumption does not depend on params.
inline absl::StatusOr<PrivateRecord> PrivatizeRecord(
    const CellTable& cells, const PrivacyParams& params,
    std::span<const double> x, double y, RngStream& rng) {
  if (cells.size() == 0) {
    return absl::FailedPreconditionError("partition has no enumerated cells");
  }
  absl::StatusOr<CellId> cell = Quantise(cells.spec(), x);
  if (!cell.ok()) return cell.status();
  absl::StatusOr<double> truncated = Truncate(y, params.m_trunc);
  if (!truncated.ok()) return truncated.status();

  const size_t n_cells = cells.size();
  PrivateRecord record;
  record.w.resize(n_cells);
  record.z.resize(n_cells);
  for (size_t j = 0; j < n_cells; ++j) {
    record.w[j] = params.sigma_w * SampleUnitLaplace(rng);
  }
  for (size_t j = 0; j < n_cells; ++j) {
    record.z[j] = params.sigma_z * SampleUnitLaplace(rng);
  }
  if (std::optional<size_t> j = cells.Find(cell->coords); j.has_value()) {
    record.w[*j] += 1.0;
    record.z[*j] += *truncated;
  }
  return record;
}

// Exact log of q(w, z | x, y) / q(w, z | x', y') for the mechanism above:
//
//   (sqrt2/sigma_w) sum_j (|w_j - 1{x' in A_j}| - |w_j - 1{x in A_j}|)
// + (sqrt2/sigma_z) sum_j (|z_j - y' 1{x' in A_j}| - |z_j - y 1{x in A_j}|).
//
// Requires |y|, |y'| <= M and positive noise scales.
inline absl::StatusOr<double> LdpLogRatio(
    const CellTable& cells, const PrivacyParams& params,
    std::span<const double> w, std::span<const double> z,
    std::span<const double> x, double y, std::span<const double> x_other,
    double y_other) {
  if (!(params.sigma_w > 0.0) || !(params.sigma_z > 0.0)) {
    return absl::InvalidArgumentError(
        "density ratio is undefined for zero noise scales");
  }
  if (w.size() != cells.size() || z.size() != cells.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("record vectors must have length N=", cells.size()));
  }
  if (!(std::abs(y) <= params.m_trunc) || !(std::abs(y_other) <= params.m_trunc)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "responses must lie in [-M, M] with M=", params.m_trunc, ", got y=", y,
        " y'=", y_other));
  }
  absl::StatusOr<CellId> cell = Quantise(cells.spec(), x);
  if (!cell.ok()) return cell.status();
  absl::StatusOr<CellId> cell_other = Quantise(cells.spec(), x_other);
  if (!cell_other.ok()) return cell_other.status();
  const std::optional<size_t> j = cells.Find(cell->coords);
  const std::optional<size_t> j_other = cells.Find(cell_other->coords);

  double w_sum = 0.0;
  double z_sum = 0.0;
  for (size_t k = 0; k < cells.size(); ++k) {
    const double in = (j == k) ? 1.0 : 0.0;
    const double in_other = (j_other == k) ? 1.0 : 0.0;
    w_sum += std::abs(w[k] - in_other) - std::abs(w[k] - in);
    z_sum += std::abs(z[k] - y_other * in_other) - std::abs(z[k] - y * in);
  }
  return std::numbers::sqrt2 / params.sigma_w * w_sum +
         std::numbers::sqrt2 / params.sigma_z * z_sum;
}

// The tuple attaining the bound: x in A_1, x' in A_2, w = e_1, z = M e_1,
// y = M, y' = -M. Every absolute-difference term then reaches its maximum
// (2 for w, 2M for z), so the log ratio equals PrivacyLossBound(params).
inline absl::StatusOr<double> WorstCaseLogRatio(const CellTable& cells,
                                                const PrivacyParams& params) {
  if (cells.size() < 2) {
    return absl::FailedPreconditionError(
        "the worst-case construction needs at least two enumerated cells");
  }
  if (!std::isfinite(params.m_trunc)) {
    return absl::FailedPreconditionError(
        "the worst-case construction needs a finite truncation level");
  }
  const std::vector<double> x = CellCenter(cells.spec(), cells.cell(0));
  const std::vector<double> x_other = CellCenter(cells.spec(), cells.cell(1));
  std::vector<double> w(cells.size(), 0.0);
  std::vector<double> z(cells.size(), 0.0);
  w[0] = 1.0;
  z[0] = params.m_trunc;
  return LdpLogRatio(cells, params, w, z, x, params.m_trunc, x_other,
                     -params.m_trunc);
}

struct RatioAudit {
  double max_log_ratio = -std::numeric_limits<double>::infinity();
  int64_t tuples = 0;
  int64_t same_cell = 0;
};

// Samples n_tuples (w, z, x, y, x', y') and records the largest log density
// ratio. x is uniform on the box [-r-h, r+h]^d (so some points fall outside
// the enumeration); every other tuple places x' in the cell of x. Half of
// the (w, z) are mechanism outputs for (x, y), the rest arbitrary vectors
// with w_j in [-1, 2] and z_j in [-2M, 2M].
inline absl::StatusOr<RatioAudit> AuditLogRatios(const CellTable& cells,
                                                 const PrivacyParams& params,
                                                 int64_t n_tuples,
                                                 RngStream& rng) {
  if (!std::isfinite(params.m_trunc)) {
    return absl::FailedPreconditionError(
        "the ratio audit needs a finite truncation level");
  }
  const PartitionSpec& spec = cells.spec();
  const double half_width = spec.radius + spec.h;
  const double m = params.m_trunc;
  auto uniform = [&rng](double lo, double hi) {
    return lo + (hi - lo) * rng.UniformOpen01();
  };
  RatioAudit audit;
  std::vector<double> x(spec.d), x_other(spec.d);
  for (int64_t t = 0; t < n_tuples; ++t) {
    for (double& coordinate : x) coordinate = uniform(-half_width, half_width);
    const bool same_cell = t % 2 == 0;
    if (same_cell) {
      for (int l = 0; l < spec.d; ++l) {
        const double k = std::floor(x[l] / spec.h);
        x_other[l] = (k + rng.UniformOpen01()) * spec.h;
      }
      ++audit.same_cell;
    } else {
      for (double& coordinate : x_other) {
        coordinate = uniform(-half_width, half_width);
      }
    }
    const double y = uniform(-m, m);
    const double y_other = uniform(-m, m);
    PrivateRecord record;
    if (t % 4 < 2) {
      absl::StatusOr<PrivateRecord> drawn =
          PrivatizeRecord(cells, params, x, y, rng);
      if (!drawn.ok()) return drawn.status();
      record = *std::move(drawn);
    } else {
      record.w.resize(cells.size());
      record.z.resize(cells.size());
      for (double& v : record.w) v = uniform(-1.0, 2.0);
      for (double& v : record.z) v = uniform(-2.0 * m, 2.0 * m);
    }
    absl::StatusOr<double> ratio = LdpLogRatio(cells, params, record.w,
                                               record.z, x, y, x_other, y_other);
    if (!ratio.ok()) return ratio.status();
    audit.max_log_ratio = std::max(audit.max_log_ratio, *ratio);
    ++audit.tuples;
  }
  return audit;
}

}  // namespace ldp_partition

#endif  // LDP_PARTITION_MECHANISM_H_
