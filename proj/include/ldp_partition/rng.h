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

#ifndef LDP_PARTITION_RNG_H_
#define LDP_PARTITION_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace ldp_partition {

// Purpose tags used when deriving independent substreams from a master seed.
// Values are part of the reproducibility contract; do not renumber.
enum class StreamPurpose : uint64_t {
  kData = 1,
  kMechanism = 2,
  kAggregateNoise = 3,
  kRiskSample = 4,
  kAudit = 5,
  kSweepJob = 6,
  kReplicate = 7,
};

// SplitMix64 finalizer.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Hashes a master seed and a path of integers (purpose tag, individual index,
// replicate, ...) into a seed for an independent substream.
constexpr uint64_t DeriveSeed(uint64_t master,
                              std::initializer_list<uint64_t> path) {
  uint64_t state = Mix64(master);
  for (uint64_t component : path) {
    state = Mix64(state ^ Mix64(component + 0x632be59bd9b4e019ULL));
  }
  return state;
}

constexpr uint64_t Tag(StreamPurpose purpose) {
  return static_cast<uint64_t>(purpose);
}

// A seeded random bit generator. Satisfies UniformRandomBitGenerator so it can
// drive the <random> distributions directly.
class RngStream {
 public:
  using result_type = uint64_t;

  explicit RngStream(uint64_t seed) : engine_(seed) {}

  static RngStream Derive(uint64_t master,
                          std::initializer_list<uint64_t> path) {
    return RngStream(DeriveSeed(master, path));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return engine_(); }

  // Uniform draw on the open interval (0, 1), built from the top 53 bits so
  // that the result does not depend on the standard library's
  // uniform_real_distribution.
  double UniformOpen01() {
    const uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ldp_partition

#endif  // LDP_PARTITION_RNG_H_
