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

#ifndef LDP_PARTITION_COLLECTOR_H_
#define LDP_PARTITION_COLLECTOR_H_

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "ldp_partition/dataset.h"
#include "ldp_partition/internal/status_macros.h"
#include "ldp_partition/mechanism.h"
#include "ldp_partition/partition.h"
#include "ldp_partition/rng.h"

namespace ldp_partition {

enum class AggregationMode { kFaithful, kFast };

inline std::string_view ModeName(AggregationMode mode) {
  return mode == AggregationMode::kFast ? "fast" : "faithful";
}

inline absl::StatusOr<AggregationMode> ParseMode(std::string_view name) {
  if (name == "faithful") return AggregationMode::kFaithful;
  if (name == "fast") return AggregationMode::kFast;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mode \"", std::string(name), "\" (expected faithful|fast)"));
}

// The publishable dataset {(j, nu_j, mu_j) : j = 1..N}: per-cell means of the
// transmitted z and w vectors.
struct PrivateAggregate {
  int64_t n = 0;
  std::shared_ptr<const CellTable> cells;
  PrivacyParams params;
  std::vector<double> nu_tilde;
  std::vector<double> mu_tilde;
  uint64_t seed = 0;
  AggregationMode mode = AggregationMode::kFaithful;

  const PartitionSpec& spec() const { return cells->spec(); }
  size_t num_cells() const { return nu_tilde.size(); }
};

struct AggregateOptions {
  // Neumaier-compensated accumulation of the per-cell sums.
  bool compensated_sum = false;
};

namespace internal {

class Accumulator {
 public:
  explicit Accumulator(bool compensated) : compensated_(compensated) {}

  void Add(double value) {
    if (!compensated_) {
      sum_ += value;
      return;
    }
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      correction_ += (sum_ - t) + value;
    } else {
      correction_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  double sum() const { return sum_ + correction_; }

 private:
  bool compensated_;
  double sum_ = 0.0;
  double correction_ = 0.0;
};

inline absl::Status ValidateAggregationInputs(
    const std::shared_ptr<const CellTable>& cells,
    const PrivacyParams& params) {
  if (cells == nullptr) {
    return absl::InvalidArgumentError("cell table is required");
  }
  if (cells->size() == 0) {
    return absl::FailedPreconditionError("partition has no enumerated cells");
  }
  return ValidatePrivacyParams(params);
}

}  // namespace internal

// Sum of n i.i.d. unit Laplace variables, drawn as the difference of two
// Gamma(n, 1/sqrt2) variables.
inline double SampleUnitLaplaceSum(RngStream& rng, int64_t n) {
  std::gamma_distribution<double> gamma(static_cast<double>(n),
                                        1.0 / std::numbers::sqrt2);
  const double positive = gamma(rng);
  const double negative = gamma(rng);
  return positive - negative;
}

// Per-cell arithmetic means of already privatised records, summed in record
// order.
inline absl::StatusOr<PrivateAggregate> AggregateFaithful(
    std::span<const PrivateRecord> records,
    std::shared_ptr<const CellTable> cells, const PrivacyParams& params,
    const AggregateOptions& options = {}) {
  LDP_RETURN_IF_ERROR(internal::ValidateAggregationInputs(cells, params));
  if (records.empty()) {
    return absl::InvalidArgumentError("at least one record is required");
  }
  const size_t n_cells = cells->size();
  std::vector<internal::Accumulator> z_sums(
      n_cells, internal::Accumulator(options.compensated_sum));
  std::vector<internal::Accumulator> w_sums = z_sums;
  for (size_t i = 0; i < records.size(); ++i) {
    const PrivateRecord& record = records[i];
    if (record.w.size() != n_cells || record.z.size() != n_cells) {
      return absl::InvalidArgumentError(
          absl::StrCat("record ", i, " has length ", record.w.size(), "/",
                       record.z.size(), ", expected N=", n_cells));
    }
    for (size_t j = 0; j < n_cells; ++j) {
      z_sums[j].Add(record.z[j]);
      w_sums[j].Add(record.w[j]);
    }
  }
  PrivateAggregate agg;
  agg.n = static_cast<int64_t>(records.size());
  agg.cells = std::move(cells);
  agg.params = params;
  agg.mode = AggregationMode::kFaithful;
  const double n = static_cast<double>(agg.n);
  agg.nu_tilde.resize(n_cells);
  agg.mu_tilde.resize(n_cells);
  for (size_t j = 0; j < n_cells; ++j) {
    agg.nu_tilde[j] = z_sums[j].sum() / n;
    agg.mu_tilde[j] = w_sums[j].sum() / n;
  }
  return agg;
}

// Seed of individual i's mechanism substream.
inline uint64_t IndividualSeed(uint64_t seed, size_t i) {
  return DeriveSeed(seed, {Tag(StreamPurpose::kMechanism), i});
}

// Runs the mechanism for every individual (individual i on substream
// IndividualSeed(seed, i)) and aggregates on the fly. Produces the same bits
// as AggregateFaithful over the materialised records.
inline absl::StatusOr<PrivateAggregate> PrivatizeAndAggregate(
    std::shared_ptr<const CellTable> cells, const PrivacyParams& params,
    const Dataset& data, uint64_t seed, const AggregateOptions& options = {}) {
  LDP_RETURN_IF_ERROR(internal::ValidateAggregationInputs(cells, params));
  if (data.size() == 0) {
    return absl::InvalidArgumentError("at least one observation is required");
  }
  const size_t n_cells = cells->size();
  std::vector<internal::Accumulator> z_sums(
      n_cells, internal::Accumulator(options.compensated_sum));
  std::vector<internal::Accumulator> w_sums = z_sums;
  for (size_t i = 0; i < data.size(); ++i) {
    RngStream rng(IndividualSeed(seed, i));
    LDP_ASSIGN_OR_RETURN(PrivateRecord record,
                         PrivatizeRecord(*cells, params, data.point(i),
                                         data.y[i], rng));
    for (size_t j = 0; j < n_cells; ++j) {
      z_sums[j].Add(record.z[j]);
      w_sums[j].Add(record.w[j]);
    }
  }
  PrivateAggregate agg;
  agg.n = static_cast<int64_t>(data.size());
  agg.cells = std::move(cells);
  agg.params = params;
  agg.seed = seed;
  agg.mode = AggregationMode::kFaithful;
  const double n = static_cast<double>(agg.n);
  agg.nu_tilde.resize(n_cells);
  agg.mu_tilde.resize(n_cells);
  for (size_t j = 0; j < n_cells; ++j) {
    agg.nu_tilde[j] = z_sums[j].sum() / n;
    agg.mu_tilde[j] = w_sums[j].sum() / n;
  }
  return agg;
}

// Same distribution as PrivatizeAndAggregate without materialising n x N
// noise draws: each cell's summed noise is one Laplace-sum draw (z noise,
// then w noise, cell by cell in table order).
inline absl::StatusOr<PrivateAggregate> AggregateFast(
    std::shared_ptr<const CellTable> cells, const PrivacyParams& params,
    const Dataset& data, RngStream& rng) {
  LDP_RETURN_IF_ERROR(internal::ValidateAggregationInputs(cells, params));
  if (data.size() == 0) {
    return absl::InvalidArgumentError("at least one observation is required");
  }
  const size_t n_cells = cells->size();
  std::vector<double> response_sums(n_cells, 0.0);
  std::vector<double> counts(n_cells, 0.0);
  for (size_t i = 0; i < data.size(); ++i) {
    LDP_ASSIGN_OR_RETURN(double truncated,
                         Truncate(data.y[i], params.m_trunc));
    LDP_ASSIGN_OR_RETURN(CellId cell, Quantise(cells->spec(), data.point(i)));
    if (std::optional<size_t> j = cells->Find(cell.coords); j.has_value()) {
      response_sums[*j] += truncated;
      counts[*j] += 1.0;
    }
  }
  PrivateAggregate agg;
  agg.n = static_cast<int64_t>(data.size());
  agg.params = params;
  agg.mode = AggregationMode::kFast;
  const double n = static_cast<double>(agg.n);
  agg.nu_tilde.resize(n_cells);
  agg.mu_tilde.resize(n_cells);
  for (size_t j = 0; j < n_cells; ++j) {
    const double z_noise = SampleUnitLaplaceSum(rng, agg.n);
    const double w_noise = SampleUnitLaplaceSum(rng, agg.n);
    agg.nu_tilde[j] = (response_sums[j] + params.sigma_z * z_noise) / n;
    agg.mu_tilde[j] = (counts[j] + params.sigma_w * w_noise) / n;
  }
  agg.cells = std::move(cells);
  return agg;
}

// ---------------------------------------------------------------------------
// Publication: <prefix>.csv with header `j,cell_coords,nu_tilde,mu_tilde` and
// a <prefix>.json sidecar holding the sample size, geometry and privacy
// parameters.

struct PublishedPaths {
  std::string csv;
  std::string sidecar;
};

inline PublishedPaths PathsForPrefix(std::string_view prefix) {
  return {absl::StrCat(std::string(prefix), ".csv"),
          absl::StrCat(std::string(prefix), ".json")};
}

inline constexpr std::string_view kAggregateCsvHeader =
    "j,cell_coords,nu_tilde,mu_tilde";

// 17 significant digits: enough to round-trip any double.
inline std::string FormatDouble(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                 std::chars_format::general, 17);
  return std::string(buffer, ptr);
}

inline absl::StatusOr<double> ParseDouble(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed number \"", std::string(text), "\""));
  }
  return value;
}

// ISO-8601 UTC timestamp; honours SOURCE_DATE_EPOCH for reproducible output.
inline std::string CurrentUtcTimestamp() {
  std::time_t seconds = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr) {
    int64_t parsed = 0;
    std::string_view text(epoch);
    auto [ptr, ec] =
        std::from_chars(text.data(), text.data() + text.size(), parsed);
    if (ec == std::errc() && ptr == text.data() + text.size()) {
      seconds = static_cast<std::time_t>(parsed);
    }
  }
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

// Writes to a sibling temporary file and renames it over `path`.
inline absl::Status WriteFileAtomically(const std::string& path,
                                        std::string_view contents) {
  const std::string temp = absl::StrCat(path, ".tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) return absl::UnavailableError(absl::StrCat("cannot open ", temp));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      return absl::UnavailableError(absl::StrCat("failed writing ", temp));
    }
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot rename ", temp, " to ", path, ": ", ec.message()));
  }
  return absl::OkStatus();
}

inline absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream contents;
  contents << in.rdbuf();
  return contents.str();
}

namespace internal {

inline nlohmann::json TruncationToJson(double m_trunc) {
  if (std::isinf(m_trunc)) return "inf";
  return m_trunc;
}

inline absl::StatusOr<double> TruncationFromJson(const nlohmann::json& value) {
  if (value.is_string() && value.get<std::string>() == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (value.is_number()) return value.get<double>();
  return absl::InvalidArgumentError("m_trunc must be a number or \"inf\"");
}

}  // namespace internal

inline nlohmann::json SidecarJson(const PrivateAggregate& agg) {
  const PartitionSpec& spec = agg.spec();
  return nlohmann::json{
      {"n", agg.n},
      {"d", spec.d},
      {"h", spec.h},
      {"radius", spec.radius},
      {"alpha", agg.params.alpha},
      {"sigma_w", agg.params.sigma_w},
      {"sigma_z", agg.params.sigma_z},
      {"m_trunc", internal::TruncationToJson(agg.params.m_trunc)},
      {"seed", agg.seed},
      {"mode", std::string(ModeName(agg.mode))},
      {"created_utc", CurrentUtcTimestamp()},
  };
}

inline std::string AggregateCsv(const PrivateAggregate& agg) {
  std::string csv = absl::StrCat(std::string(kAggregateCsvHeader), "\n");
  for (size_t j = 0; j < agg.num_cells(); ++j) {
    absl::StrAppend(&csv, j + 1, ",\"", FormatCoords(agg.cells->coords(j)),
                    "\",", FormatDouble(agg.nu_tilde[j]), ",",
                    FormatDouble(agg.mu_tilde[j]), "\n");
  }
  return csv;
}

inline absl::Status Publish(const PrivateAggregate& agg,
                            std::string_view prefix) {
  if (agg.cells == nullptr || agg.nu_tilde.size() != agg.cells->size() ||
      agg.mu_tilde.size() != agg.cells->size()) {
    return absl::InvalidArgumentError(
        "aggregate vectors do not match its cell table");
  }
  const PublishedPaths paths = PathsForPrefix(prefix);
  LDP_RETURN_IF_ERROR(WriteFileAtomically(paths.csv, AggregateCsv(agg)));
  return WriteFileAtomically(paths.sidecar,
                             SidecarJson(agg).dump(2) + "\n");
}

inline absl::StatusOr<PrivateAggregate> Load(
    std::string_view prefix, int64_t max_cells = kDefaultMaxCells) {
  const PublishedPaths paths = PathsForPrefix(prefix);
  LDP_ASSIGN_OR_RETURN(std::string sidecar_text, ReadFile(paths.sidecar));
  LDP_ASSIGN_OR_RETURN(std::string csv_text, ReadFile(paths.csv));

  nlohmann::json sidecar =
      nlohmann::json::parse(sidecar_text, nullptr, /*allow_exceptions=*/false);
  if (!sidecar.is_object()) {
    return absl::DataLossError(
        absl::StrCat(paths.sidecar, " is not a JSON object"));
  }
  static constexpr std::string_view kKeys[] = {
      "n",       "d",       "h",    "radius", "alpha",      "sigma_w",
      "sigma_z", "m_trunc", "seed", "mode",   "created_utc"};
  for (std::string_view key : kKeys) {
    if (!sidecar.contains(std::string(key))) {
      return absl::DataLossError(
          absl::StrCat(paths.sidecar, " is missing key \"", std::string(key),
                       "\""));
    }
  }
  for (const auto& [key, value] : sidecar.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      return absl::DataLossError(
          absl::StrCat(paths.sidecar, " has unknown key \"", key, "\""));
    }
  }

  PrivateAggregate agg;
  PartitionSpec spec;
  try {
    agg.n = sidecar.at("n").get<int64_t>();
    spec.d = sidecar.at("d").get<int>();
    spec.h = sidecar.at("h").get<double>();
    spec.radius = sidecar.at("radius").get<double>();
    agg.params.alpha = sidecar.at("alpha").get<double>();
    agg.params.sigma_w = sidecar.at("sigma_w").get<double>();
    agg.params.sigma_z = sidecar.at("sigma_z").get<double>();
    agg.seed = sidecar.at("seed").get<uint64_t>();
    LDP_ASSIGN_OR_RETURN(agg.mode,
                         ParseMode(sidecar.at("mode").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    return absl::DataLossError(
        absl::StrCat(paths.sidecar, " has a malformed field: ", e.what()));
  }
  LDP_ASSIGN_OR_RETURN(agg.params.m_trunc,
                       internal::TruncationFromJson(sidecar.at("m_trunc")));
  if (agg.n < 1) return absl::DataLossError("sidecar n must be positive");
  LDP_RETURN_IF_ERROR(ValidatePrivacyParams(agg.params));
  LDP_ASSIGN_OR_RETURN(CellTable table, CellTable::Create(spec, max_cells));
  agg.cells = std::make_shared<const CellTable>(std::move(table));

  std::istringstream lines(csv_text);
  std::string line;
  if (!std::getline(lines, line) || line != kAggregateCsvHeader) {
    return absl::DataLossError(
        absl::StrCat(paths.csv, ": expected header \"",
                     std::string(kAggregateCsvHeader), "\""));
  }
  struct Row {
    std::string j;
    std::vector<int64_t> coords;
    double nu;
    double mu;
  };
  std::vector<Row> rows;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const std::string_view text(line);
    const size_t open = text.find(",\"");
    const size_t close = text.find("\",", open == std::string_view::npos
                                              ? 0
                                              : open + 2);
    const size_t comma = close == std::string_view::npos
                             ? std::string_view::npos
                             : text.find(',', close + 2);
    if (open == std::string_view::npos || close == std::string_view::npos ||
        comma == std::string_view::npos) {
      return absl::DataLossError(
          absl::StrCat(paths.csv, ": malformed row ", rows.size() + 1));
    }
    Row row;
    row.j = std::string(text.substr(0, open));
    LDP_ASSIGN_OR_RETURN(row.coords,
                         ParseCoords(text.substr(open + 2, close - open - 2)));
    LDP_ASSIGN_OR_RETURN(row.nu,
                         ParseDouble(text.substr(close + 2, comma - close - 2)));
    LDP_ASSIGN_OR_RETURN(row.mu, ParseDouble(text.substr(comma + 1)));
    rows.push_back(std::move(row));
  }
  const size_t n_cells = agg.cells->size();
  if (rows.size() != n_cells) {
    return absl::DataLossError(absl::StrCat(
        paths.csv, " has ", rows.size(), " rows, partition has N=", n_cells));
  }
  agg.nu_tilde.reserve(n_cells);
  agg.mu_tilde.reserve(n_cells);
  for (size_t i = 0; i < n_cells; ++i) {
    const Row& row = rows[i];
    std::span<const int64_t> expected = agg.cells->coords(i);
    if (row.j != std::to_string(i + 1) ||
        !std::equal(row.coords.begin(), row.coords.end(), expected.begin(),
                    expected.end())) {
      return absl::DataLossError(absl::StrCat(
          paths.csv, ": row ", i + 1, " does not match the enumeration (j=",
          row.j, ", coords ", FormatCoords(row.coords), ")"));
    }
    agg.nu_tilde.push_back(row.nu);
    agg.mu_tilde.push_back(row.mu);
  }
  return agg;
}

}  // namespace ldp_partition

#endif  // LDP_PARTITION_COLLECTOR_H_
