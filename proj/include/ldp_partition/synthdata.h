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

#ifndef LDP_PARTITION_SYNTHDATA_H_
#define LDP_PARTITION_SYNTHDATA_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "ldp_partition/dataset.h"
#include "ldp_partition/rng.h"

namespace ldp_partition {

// A data-generating distribution of (X, Y) with known regression function.
struct Scenario {
  std::string name;
  int d = 1;
  bool is_classification = false;
  // Lipschitz constant of true_m (Euclidean norm) on the support, if any.
  std::optional<double> lipschitz_const;
  bool y_second_moment_finite = true;
  // True when X has a density bounded away from zero on its support.
  bool density_bounded_below = false;

  std::function<Dataset(RngStream&, size_t)> sample_xy;
  // n draws from the marginal of X, row-major (n * d values).
  std::function<std::vector<double>(RngStream&, size_t)> sample_x;
  std::function<double(std::span<const double>)> true_m;
};

struct ScenarioParams {
  // Probability of the atom at the origin (heavytail-mixture).
  double atom_weight = 0.3;
  // Scale of the additive response noise (regression scenarios).
  double noise_scale = 1.0;
};

inline constexpr std::string_view kScenarioNames[] = {
    "lipschitz-uniform", "heavytail-mixture", "classification-smooth"};

namespace internal {

inline void FillUniformCube(RngStream& rng, double lo, double hi,
                            std::span<double> out) {
  for (double& coordinate : out) {
    coordinate = lo + (hi - lo) * rng.UniformOpen01();
  }
}

// Builds sample_xy from a point sampler and a conditional response sampler.
// The point is drawn first, then its response, observation by observation.
template <typename PointSampler, typename ResponseSampler>
std::function<Dataset(RngStream&, size_t)> MakePairSampler(
    int d, PointSampler point, ResponseSampler response) {
  return [d, point, response](RngStream& rng, size_t n) {
    Dataset data;
    data.d = d;
    data.x.resize(n * d);
    data.y.resize(n);
    auto draw_response = response;
    for (size_t i = 0; i < n; ++i) {
      std::span<double> xi(data.x.data() + i * d, static_cast<size_t>(d));
      point(rng, xi);
      data.y[i] = draw_response(rng, std::span<const double>(xi));
    }
    return data;
  };
}

template <typename PointSampler>
std::function<std::vector<double>(RngStream&, size_t)> MakeMarginalSampler(
    int d, PointSampler point) {
  return [d, point](RngStream& rng, size_t n) {
    std::vector<double> x(n * d);
    for (size_t i = 0; i < n; ++i) {
      point(rng, std::span<double>(x.data() + i * d, static_cast<size_t>(d)));
    }
    return x;
  };
}

}  // namespace internal

// Built-in scenarios:
//   lipschitz-uniform      X ~ U[0,1]^d, m(x) = sum_l sin(2 pi x_l)/d,
//                          Y = m(X) + U[-1,1]. Bounded Y, density bounded
//                          below on the support.
//   heavytail-mixture      X = 0 with probability atom_weight, else
//                          U[-1,1]^d; m(x) = ||x||_1; Y = m(X) + T with T a
//                          Student-t(3) scaled to unit variance.
//   classification-smooth  X ~ U[0,1]^d, P(Y=1|x) = (1 + sin(2 pi x_1))/2,
//                          Y in {-1, +1}.
inline absl::StatusOr<Scenario> MakeScenario(std::string_view name, int d,
                                             const ScenarioParams& params = {}) {
  if (d < 1) {
    return absl::InvalidArgumentError(absl::StrCat("d must be >= 1, got ", d));
  }
  if (!(params.noise_scale >= 0.0) || !(params.atom_weight >= 0.0) ||
      !(params.atom_weight < 1.0)) {
    return absl::InvalidArgumentError(
        "noise_scale must be >= 0 and atom_weight in [0, 1)");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  Scenario scenario;
  scenario.name = std::string(name);
  scenario.d = d;

  if (name == "lipschitz-uniform") {
    auto point = [](RngStream& rng, std::span<double> x) {
      internal::FillUniformCube(rng, 0.0, 1.0, x);
    };
    auto m = [d](std::span<const double> x) {
      double sum = 0.0;
      for (double coordinate : x) sum += std::sin(kTwoPi * coordinate);
      return sum / d;
    };
    const double noise = params.noise_scale;
    scenario.lipschitz_const = kTwoPi / std::sqrt(static_cast<double>(d));
    scenario.density_bounded_below = true;
    scenario.true_m = m;
    scenario.sample_x = internal::MakeMarginalSampler(d, point);
    scenario.sample_xy = internal::MakePairSampler(
        d, point, [m, noise](RngStream& rng, std::span<const double> x) {
          return m(x) + noise * (2.0 * rng.UniformOpen01() - 1.0);
        });
    return scenario;
  }

  if (name == "heavytail-mixture") {
    const double atom = params.atom_weight;
    auto point = [atom](RngStream& rng, std::span<double> x) {
      if (rng.UniformOpen01() < atom) {
        std::fill(x.begin(), x.end(), 0.0);
      } else {
        internal::FillUniformCube(rng, -1.0, 1.0, x);
      }
    };
    auto m = [](std::span<const double> x) {
      double sum = 0.0;
      for (double coordinate : x) sum += std::abs(coordinate);
      return sum;
    };
    // Var(t_3) = 3.
    const double noise = params.noise_scale / std::sqrt(3.0);
    scenario.lipschitz_const = std::sqrt(static_cast<double>(d));
    scenario.density_bounded_below = false;
    scenario.true_m = m;
    scenario.sample_x = internal::MakeMarginalSampler(d, point);
    scenario.sample_xy = [d, point, m, noise](RngStream& rng, size_t n) {
      std::student_t_distribution<double> student(3.0);
      return internal::MakePairSampler(
          d, point,
          [&student, m, noise](RngStream& r, std::span<const double> x) {
            return m(x) + noise * student(r);
          })(rng, n);
    };
    return scenario;
  }

  if (name == "classification-smooth") {
    auto point = [](RngStream& rng, std::span<double> x) {
      internal::FillUniformCube(rng, 0.0, 1.0, x);
    };
    auto m = [](std::span<const double> x) { return std::sin(kTwoPi * x[0]); };
    scenario.is_classification = true;
    scenario.lipschitz_const = kTwoPi;
    scenario.density_bounded_below = true;
    scenario.true_m = m;
    scenario.sample_x = internal::MakeMarginalSampler(d, point);
    scenario.sample_xy = internal::MakePairSampler(
        d, point, [m](RngStream& rng, std::span<const double> x) {
          const double eta = 0.5 * (1.0 + m(x));
          return rng.UniformOpen01() < eta ? 1.0 : -1.0;
        });
    return scenario;
  }

  return absl::InvalidArgumentError(absl::StrCat(
      "unknown scenario \"", std::string(name),
      "\" (expected lipschitz-uniform|heavytail-mixture|classification-smooth)"));
}

// |m(x)| = |2 P(Y=1|x) - 1|, the weight of a classification mistake at x in
// the excess risk.
inline absl::StatusOr<double> BayesExcessWeight(const Scenario& scenario,
                                                std::span<const double> x) {
  if (!scenario.is_classification) {
    return absl::InvalidArgumentError(absl::StrCat(
        "scenario \"", scenario.name, "\" is not a classification scenario"));
  }
  return std::abs(scenario.true_m(x));
}

}  // namespace ldp_partition

#endif  // LDP_PARTITION_SYNTHDATA_H_
