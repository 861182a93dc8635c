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

// Experiment configuration shared by the command-line subcommands: JSON
// (de)serialisation with strict key checking, validation and exit codes.

#ifndef LDP_PARTITION_CONFIG_H_
#define LDP_PARTITION_CONFIG_H_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "ldp_partition/collector.h"
#include "ldp_partition/internal/status_macros.h"
#include "ldp_partition/partition.h"
#include "ldp_partition/synthdata.h"

namespace ldp_partition {

inline constexpr uint64_t kDefaultMasterSeed = 2026;
inline constexpr const char kSeedEnvVar[] = "LDP_PARTITION_SEED";

struct ExperimentConfig {
  std::string scenario = "lipschitz-uniform";
  int d = 1;
  double atom_weight = 0.3;
  double noise_scale = 1.0;
  double alpha = 2.0;
  int64_t n = 4096;
  std::vector<int64_t> ns = {4096, 16384, 65536};
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  AggregationMode mode = AggregationMode::kFast;
  bool non_private = false;
  bool compensated_sum = false;
  double c_prime = 1.0;
  double m_scale = 1.0;
  double r_scale = 1.0;
  std::optional<double> h;
  std::optional<double> c;
  std::optional<double> m_trunc;
  std::optional<double> radius;
  std::optional<double> sigma_w;
  std::optional<double> sigma_z;
  int64_t n_test = 100000;
  std::string out;
  std::string input;
  std::optional<uint64_t> master_seed;
  int jobs = 1;
  int64_t max_cells = kDefaultMaxCells;
  int64_t audit_tuples = 10000;
  int64_t audit_tail_reps = 100000;
  int64_t audit_variance_reps = 5000;
};

struct ConfigKeyDoc {
  std::string_view key;
  std::string_view help;
};

// Every key accepted in a config file. Flags use the same names with '-'.
inline constexpr ConfigKeyDoc kConfigKeys[] = {
    {"scenario", "lipschitz-uniform | heavytail-mixture | classification-smooth"},
    {"d", "input dimension"},
    {"atom_weight", "heavytail-mixture: probability of the atom at 0"},
    {"noise_scale", "standard deviation scale of the response noise"},
    {"alpha", "privacy budget (alpha > 0)"},
    {"n", "sample size for privatize/audit/check"},
    {"ns", "strictly increasing sample sizes for sweep"},
    {"seeds", "replicate seeds for sweep"},
    {"mode", "aggregation path: faithful | fast"},
    {"non_private", "sweep with sigma = 0, M = inf, c = log n/(n h^d)"},
    {"compensated_sum", "faithful path: Neumaier-compensated sums"},
    {"c_prime", "bandwidth scale: h = c_prime n^(-1/(2(d+1)))"},
    {"m_scale", "truncation scale: M = m_scale sqrt(log n)"},
    {"r_scale", "radius scale: r = r_scale log(1+n)"},
    {"h", "explicit bandwidth (null = schedule)"},
    {"c", "explicit occupancy threshold (null = 1/sqrt(log n))"},
    {"m_trunc", "explicit truncation level, number or \"inf\" (null = schedule)"},
    {"radius", "explicit radius (null = schedule)"},
    {"sigma_w", "override calibrated sigma_W (audit mis-calibration)"},
    {"sigma_z", "override calibrated sigma_Z (audit mis-calibration)"},
    {"n_test", "test points per risk estimate"},
    {"out", "output path prefix (<out>.csv, <out>.json)"},
    {"input", "published aggregate prefix read by estimate"},
    {"master_seed", "master seed (null = $LDP_PARTITION_SEED, else 2026)"},
    {"jobs", "worker threads for sweep"},
    {"max_cells", "cap on the number of enumerated cells"},
    {"audit_tuples", "audit: random tuples for the log-ratio check"},
    {"audit_tail_reps", "audit: replicates per tail-bound grid point"},
    {"audit_variance_reps", "audit: replicates for the variance identity"},
};

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitPropertyFailure = 3,
  kExitIo = 4,
};

inline int ExitCodeForStatus(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return kExitOk;
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kUnavailable:
    case absl::StatusCode::kDataLoss:
    case absl::StatusCode::kPermissionDenied:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

namespace internal {

inline nlohmann::json OptionalToJson(const std::optional<double>& value) {
  if (!value) return nullptr;
  if (std::isinf(*value)) return *value > 0 ? "inf" : "-inf";
  return *value;
}

inline absl::StatusOr<std::optional<double>> OptionalFromJson(
    const nlohmann::json& value) {
  if (value.is_null()) return std::optional<double>();
  if (value.is_string()) {
    if (value.get<std::string>() == "inf") {
      return std::optional<double>(std::numeric_limits<double>::infinity());
    }
    return absl::InvalidArgumentError(
        absl::StrCat("expected a number, \"inf\" or null, got ", value.dump()));
  }
  if (!value.is_number()) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected a number or null, got ", value.dump()));
  }
  return std::optional<double>(value.get<double>());
}

}  // namespace internal

inline nlohmann::json ConfigToJson(const ExperimentConfig& config) {
  nlohmann::json j;
  j["scenario"] = config.scenario;
  j["d"] = config.d;
  j["atom_weight"] = config.atom_weight;
  j["noise_scale"] = config.noise_scale;
  j["alpha"] = config.alpha;
  j["n"] = config.n;
  j["ns"] = config.ns;
  j["seeds"] = config.seeds;
  j["mode"] = std::string(ModeName(config.mode));
  j["non_private"] = config.non_private;
  j["compensated_sum"] = config.compensated_sum;
  j["c_prime"] = config.c_prime;
  j["m_scale"] = config.m_scale;
  j["r_scale"] = config.r_scale;
  j["h"] = internal::OptionalToJson(config.h);
  j["c"] = internal::OptionalToJson(config.c);
  j["m_trunc"] = internal::OptionalToJson(config.m_trunc);
  j["radius"] = internal::OptionalToJson(config.radius);
  j["sigma_w"] = internal::OptionalToJson(config.sigma_w);
  j["sigma_z"] = internal::OptionalToJson(config.sigma_z);
  j["n_test"] = config.n_test;
  j["out"] = config.out;
  j["input"] = config.input;
  j["master_seed"] = config.master_seed ? nlohmann::json(*config.master_seed)
                                        : nlohmann::json(nullptr);
  j["jobs"] = config.jobs;
  j["max_cells"] = config.max_cells;
  j["audit_tuples"] = config.audit_tuples;
  j["audit_tail_reps"] = config.audit_tail_reps;
  j["audit_variance_reps"] = config.audit_variance_reps;
  return j;
}

// Overlays the keys present in `j` onto `base`. Unknown keys and ill-typed
// values are errors.
inline absl::StatusOr<ExperimentConfig> ConfigFromJson(
    const nlohmann::json& j, ExperimentConfig base = {}) {
  if (!j.is_object()) {
    return absl::InvalidArgumentError("config must be a JSON object");
  }
  ExperimentConfig& config = base;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "scenario") {
        config.scenario = value.get<std::string>();
      } else if (key == "d") {
        config.d = value.get<int>();
      } else if (key == "atom_weight") {
        config.atom_weight = value.get<double>();
      } else if (key == "noise_scale") {
        config.noise_scale = value.get<double>();
      } else if (key == "alpha") {
        config.alpha = value.get<double>();
      } else if (key == "n") {
        config.n = value.get<int64_t>();
      } else if (key == "ns") {
        config.ns = value.get<std::vector<int64_t>>();
      } else if (key == "seeds") {
        config.seeds = value.get<std::vector<uint64_t>>();
      } else if (key == "mode") {
        LDP_ASSIGN_OR_RETURN(config.mode, ParseMode(value.get<std::string>()));
      } else if (key == "non_private") {
        config.non_private = value.get<bool>();
      } else if (key == "compensated_sum") {
        config.compensated_sum = value.get<bool>();
      } else if (key == "c_prime") {
        config.c_prime = value.get<double>();
      } else if (key == "m_scale") {
        config.m_scale = value.get<double>();
      } else if (key == "r_scale") {
        config.r_scale = value.get<double>();
      } else if (key == "h") {
        LDP_ASSIGN_OR_RETURN(config.h, internal::OptionalFromJson(value));
      } else if (key == "c") {
        LDP_ASSIGN_OR_RETURN(config.c, internal::OptionalFromJson(value));
      } else if (key == "m_trunc") {
        LDP_ASSIGN_OR_RETURN(config.m_trunc, internal::OptionalFromJson(value));
      } else if (key == "radius") {
        LDP_ASSIGN_OR_RETURN(config.radius, internal::OptionalFromJson(value));
      } else if (key == "sigma_w") {
        LDP_ASSIGN_OR_RETURN(config.sigma_w, internal::OptionalFromJson(value));
      } else if (key == "sigma_z") {
        LDP_ASSIGN_OR_RETURN(config.sigma_z, internal::OptionalFromJson(value));
      } else if (key == "n_test") {
        config.n_test = value.get<int64_t>();
      } else if (key == "out") {
        config.out = value.get<std::string>();
      } else if (key == "input") {
        config.input = value.get<std::string>();
      } else if (key == "master_seed") {
        config.master_seed = value.is_null()
                                 ? std::nullopt
                                 : std::optional<uint64_t>(value.get<uint64_t>());
      } else if (key == "jobs") {
        config.jobs = value.get<int>();
      } else if (key == "max_cells") {
        config.max_cells = value.get<int64_t>();
      } else if (key == "audit_tuples") {
        config.audit_tuples = value.get<int64_t>();
      } else if (key == "audit_tail_reps") {
        config.audit_tail_reps = value.get<int64_t>();
      } else if (key == "audit_variance_reps") {
        config.audit_variance_reps = value.get<int64_t>();
      } else {
        return absl::InvalidArgumentError(
            absl::StrCat("unknown config key \"", key, "\""));
      }
    } catch (const nlohmann::json::exception& e) {
      return absl::InvalidArgumentError(
          absl::StrCat("config key \"", key, "\": ", e.what()));
    }
  }
  return config;
}

inline absl::StatusOr<ExperimentConfig> LoadConfigFile(
    const std::string& path, ExperimentConfig base = {}) {
  LDP_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("config ", path, " is not valid JSON: ", e.what()));
  }
  return ConfigFromJson(j, std::move(base));
}

inline absl::StatusOr<uint64_t> ParseSeed(std::string_view text) {
  uint64_t seed = 0;
  const auto [end, ec] =
      std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid seed \"", std::string(text), "\""));
  }
  return seed;
}

// Explicit master_seed, else $LDP_PARTITION_SEED, else kDefaultMasterSeed.
inline absl::StatusOr<uint64_t> ResolveMasterSeed(
    const ExperimentConfig& config) {
  if (config.master_seed) return *config.master_seed;
  if (const char* env = std::getenv(kSeedEnvVar); env != nullptr) {
    absl::StatusOr<uint64_t> seed = ParseSeed(env);
    if (!seed.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat(kSeedEnvVar, ": ", seed.status().message()));
    }
    return seed;
  }
  return kDefaultMasterSeed;
}

inline absl::Status ValidateConfig(const ExperimentConfig& config) {
  auto fail = [](auto&&... parts) {
    return absl::InvalidArgumentError(absl::StrCat(parts...));
  };
  LDP_RETURN_IF_ERROR(
      MakeScenario(config.scenario, config.d,
                   {.atom_weight = config.atom_weight,
                    .noise_scale = config.noise_scale})
          .status());
  if (!(config.alpha > 0.0) || !std::isfinite(config.alpha)) {
    return fail("alpha must be positive and finite, got ", config.alpha);
  }
  if (config.n < 2) return fail("n must be >= 2, got ", config.n);
  if (config.ns.empty()) return fail("ns must be non-empty");
  for (size_t i = 0; i < config.ns.size(); ++i) {
    if (config.ns[i] < 2 || (i > 0 && config.ns[i] <= config.ns[i - 1])) {
      return fail("ns must be strictly increasing and >= 2");
    }
  }
  if (config.seeds.empty()) return fail("seeds must be non-empty");
  for (double scale : {config.c_prime, config.m_scale, config.r_scale}) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      return fail("c_prime, m_scale and r_scale must be positive and finite");
    }
  }
  for (const auto& [name, value] :
       {std::pair<const char*, std::optional<double>>{"h", config.h},
        {"c", config.c},
        {"radius", config.radius}}) {
    if (value && (!(*value > 0.0) || !std::isfinite(*value))) {
      return fail(name, " must be positive and finite, got ", *value);
    }
  }
  if (config.m_trunc && !(*config.m_trunc > 0.0)) {
    return fail("m_trunc must be positive, got ", *config.m_trunc);
  }
  for (const auto& [name, value] :
       {std::pair<const char*, std::optional<double>>{"sigma_w", config.sigma_w},
        {"sigma_z", config.sigma_z}}) {
    if (value && (!(*value >= 0.0) || !std::isfinite(*value))) {
      return fail(name, " must be >= 0 and finite, got ", *value);
    }
  }
  if (config.n_test < 1) return fail("n_test must be >= 1");
  if (config.jobs < 1) return fail("jobs must be >= 1");
  if (config.max_cells < 1) return fail("max_cells must be >= 1");
  if (config.audit_tuples < 1 || config.audit_tail_reps < 1 ||
      config.audit_variance_reps < 2) {
    return fail("audit_tuples, audit_tail_reps >= 1 and "
                "audit_variance_reps >= 2 required");
  }
  return absl::OkStatus();
}

}  // namespace ldp_partition

#endif  // LDP_PARTITION_CONFIG_H_
