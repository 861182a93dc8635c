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

#ifndef LDP_PARTITION_PARTITION_H_
#define LDP_PARTITION_PARTITION_H_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/container/inlined_vector.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace ldp_partition {

// Axis-aligned cubic partition of R^d anchored at the origin. Cells are the
// half-open cubes [k_l h, (k_l + 1) h) for integer lattice indices k; only the
// cells meeting the closed origin-centred ball of the given radius are
// enumerated.
struct PartitionSpec {
  double h = 1.0;
  int d = 1;
  double radius = 1.0;
};

inline constexpr int64_t kDefaultMaxCells = 10'000'000;

inline absl::Status ValidatePartitionSpec(const PartitionSpec& spec) {
  if (!(spec.h > 0.0) || !std::isfinite(spec.h)) {
    return absl::InvalidArgumentError(
        absl::StrCat("cell width h must be positive and finite, got ", spec.h));
  }
  if (spec.d < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("dimension d must be at least 1, got ", spec.d));
  }
  if (!(spec.radius > 0.0) || !std::isfinite(spec.radius)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "ball radius must be positive and finite, got ", spec.radius));
  }
  return absl::OkStatus();
}

// Lattice index of a cube. Ordered lexicographically.
struct CellId {
  std::vector<int64_t> coords;

  friend auto operator<=>(const CellId&, const CellId&) = default;
  friend bool operator==(const CellId&, const CellId&) = default;
};

namespace internal {

inline constexpr double kMaxLatticeIndex = 0x1.0p62;

// Squared distance from the origin to the closed interval [k h, (k + 1) h].
inline double NearestSquared(int64_t k, double h) {
  const double lo = static_cast<double>(k) * h;
  const double hi = static_cast<double>(k + 1) * h;
  const double p = std::clamp(0.0, lo, hi);
  return p * p;
}

inline absl::StatusOr<int64_t> LatticeIndex(double coordinate, double h) {
  if (!std::isfinite(coordinate)) {
    return absl::InvalidArgumentError(
        absl::StrCat("non-finite coordinate ", coordinate));
  }
  const double k = std::floor(coordinate / h);
  if (std::abs(k) > kMaxLatticeIndex) {
    return absl::OutOfRangeError(
        absl::StrCat("coordinate ", coordinate, " is outside the lattice range"));
  }
  return static_cast<int64_t>(k);
}

// Largest k >= 0 with partial + (k h)^2 <= r2, or -1 if even k = 0 fails.
// Cells with negative k mirror these (k <-> -k - 1).
inline int64_t LastAdmissibleIndex(double partial, double r2, double h) {
  if (partial > r2) return -1;
  int64_t k = static_cast<int64_t>(std::floor(std::sqrt(r2 - partial) / h));
  while (k > 0 && partial + NearestSquared(k, h) > r2) --k;
  while (partial + NearestSquared(k + 1, h) <= r2) ++k;
  return k;
}

// Counts cells meeting the ball, stopping once the count exceeds `limit`.
inline int64_t CountCells(const PartitionSpec& spec, int axis, double partial,
                          double r2, int64_t limit) {
  const int64_t last = LastAdmissibleIndex(partial, r2, spec.h);
  if (last < 0) return 0;
  if (axis == spec.d - 1) return 2 * (last + 1);
  int64_t total = 0;
  for (int64_t k = -last - 1; k <= last && total <= limit; ++k) {
    total += CountCells(spec, axis + 1, partial + NearestSquared(k, spec.h),
                        r2, limit - total);
  }
  return total;
}

inline void AppendCells(const PartitionSpec& spec, int axis, double partial,
                        double r2, std::vector<int64_t>& prefix,
                        std::vector<int64_t>& out) {
  const int64_t last = LastAdmissibleIndex(partial, r2, spec.h);
  for (int64_t k = -last - 1; k <= last; ++k) {
    const double next = partial + NearestSquared(k, spec.h);
    if (next > r2) continue;
    prefix[axis] = k;
    if (axis == spec.d - 1) {
      out.insert(out.end(), prefix.begin(), prefix.end());
    } else {
      AppendCells(spec, axis + 1, next, r2, prefix, out);
    }
  }
}

inline int CompareCoords(std::span<const int64_t> a,
                         std::span<const int64_t> b) {
  for (size_t l = 0; l < a.size(); ++l) {
    if (a[l] != b[l]) return a[l] < b[l] ? -1 : 1;
  }
  return 0;
}

}  // namespace internal

// Returns the cell whose half-open cube contains x: coords_l = floor(x_l / h).
inline absl::StatusOr<CellId> Quantise(const PartitionSpec& spec,
                                       std::span<const double> x) {
  if (x.size() != static_cast<size_t>(spec.d)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "point has ", x.size(), " coordinates, partition has d=", spec.d));
  }
  CellId cell;
  cell.coords.reserve(x.size());
  for (double coordinate : x) {
    absl::StatusOr<int64_t> k = internal::LatticeIndex(coordinate, spec.h);
    if (!k.ok()) return k.status();
    cell.coords.push_back(*k);
  }
  return cell;
}

inline std::vector<double> CellCenter(const PartitionSpec& spec,
                                      const CellId& cell) {
  std::vector<double> center;
  center.reserve(cell.coords.size());
  for (int64_t k : cell.coords) {
    center.push_back((static_cast<double>(k) + 0.5) * spec.h);
  }
  return center;
}

// True iff the closed cube meets the closed ball, tested with the point of the
// cube nearest to the origin.
inline bool IntersectsBall(const PartitionSpec& spec, const CellId& cell) {
  double sum = 0.0;
  for (int64_t k : cell.coords) sum += internal::NearestSquared(k, spec.h);
  return sum <= spec.radius * spec.radius;
}

// The enumerated cells A_1..A_N of a partition, in lexicographic order of
// lattice coordinates. Index lookups are binary searches.
class CellTable {
 public:
  static absl::StatusOr<CellTable> Create(const PartitionSpec& spec,
                                          int64_t max_cells = kDefaultMaxCells) {
    if (absl::Status status = ValidatePartitionSpec(spec); !status.ok()) {
      return status;
    }
    const double r2 = spec.radius * spec.radius;
    const int64_t count = internal::CountCells(spec, 0, 0.0, r2, max_cells);
    if (count > max_cells) {
      const double ball_volume =
          std::pow(std::numbers::pi, spec.d / 2.0) *
          std::pow(spec.radius + spec.h * std::sqrt(spec.d), spec.d) /
          std::tgamma(spec.d / 2.0 + 1.0);
      return absl::ResourceExhaustedError(absl::StrCat(
          "partition has more than ", max_cells, " cells (counted at least ",
          count, ", roughly ", ball_volume / std::pow(spec.h, spec.d),
          " expected); increase h or decrease the radius"));
    }
    CellTable table;
    table.spec_ = spec;
    table.coords_.reserve(static_cast<size_t>(count) * spec.d);
    std::vector<int64_t> prefix(spec.d, 0);
    internal::AppendCells(spec, 0, 0.0, r2, prefix, table.coords_);
    return table;
  }

  const PartitionSpec& spec() const { return spec_; }
  int d() const { return spec_.d; }
  size_t size() const { return coords_.size() / static_cast<size_t>(spec_.d); }

  std::span<const int64_t> coords(size_t index) const {
    return std::span<const int64_t>(coords_).subspan(
        index * static_cast<size_t>(spec_.d), static_cast<size_t>(spec_.d));
  }

  CellId cell(size_t index) const {
    std::span<const int64_t> c = coords(index);
    return CellId{std::vector<int64_t>(c.begin(), c.end())};
  }

  // 0-based position of the cell, or nullopt if it does not meet the ball.
  std::optional<size_t> Find(std::span<const int64_t> coords_to_find) const {
    if (coords_to_find.size() != static_cast<size_t>(spec_.d)) {
      return std::nullopt;
    }
    size_t lo = 0, hi = size();
    while (lo < hi) {
      const size_t mid = lo + (hi - lo) / 2;
      const int cmp = internal::CompareCoords(coords(mid), coords_to_find);
      if (cmp == 0) return mid;
      if (cmp < 0) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return std::nullopt;
  }

  // 0-based position of the cell containing x; nullopt when x is not finite
  // or its cell is not enumerated.
  std::optional<size_t> Locate(std::span<const double> x) const {
    if (x.size() != static_cast<size_t>(spec_.d)) return std::nullopt;
    absl::InlinedVector<int64_t, 4> k;
    for (double coordinate : x) {
      absl::StatusOr<int64_t> index =
          internal::LatticeIndex(coordinate, spec_.h);
      if (!index.ok()) return std::nullopt;
      k.push_back(*index);
    }
    return Find(k);
  }

 private:
  PartitionSpec spec_;
  std::vector<int64_t> coords_;
};

inline absl::StatusOr<std::vector<CellId>> EnumerateCells(
    const PartitionSpec& spec, int64_t max_cells = kDefaultMaxCells) {
  absl::StatusOr<CellTable> table = CellTable::Create(spec, max_cells);
  if (!table.ok()) return table.status();
  std::vector<CellId> cells;
  cells.reserve(table->size());
  for (size_t i = 0; i < table->size(); ++i) cells.push_back(table->cell(i));
  return cells;
}

// 1-based index j of the cell in the enumeration.
inline std::optional<int64_t> CellIndex(const CellTable& table,
                                        const CellId& cell) {
  std::optional<size_t> index = table.Find(cell.coords);
  if (!index.has_value()) return std::nullopt;
  return static_cast<int64_t>(*index) + 1;
}

// "k_1,...,k_d", the CSV form of a lattice index.
inline std::string FormatCoords(std::span<const int64_t> coords) {
  return absl::StrJoin(coords, ",");
}

inline absl::StatusOr<std::vector<int64_t>> ParseCoords(std::string_view text) {
  std::vector<int64_t> coords;
  size_t start = 0;
  while (true) {
    const size_t end = std::min(text.find(',', start), text.size());
    const std::string_view part = text.substr(start, end - start);
    int64_t value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(),
                                     value);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("malformed cell coordinates \"", std::string(text),
                       "\""));
    }
    coords.push_back(value);
    if (end == text.size()) break;
    start = end + 1;
  }
  return coords;
}

}  // namespace ldp_partition

#endif  // LDP_PARTITION_PARTITION_H_
