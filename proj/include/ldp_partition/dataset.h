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

#ifndef LDP_PARTITION_DATASET_H_
#define LDP_PARTITION_DATASET_H_

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace ldp_partition {

// n observations (x_i, y_i) with x_i in R^d, stored row-major in one buffer.
struct Dataset {
  int d = 1;
  std::vector<double> x;  // size() * d coordinates
  std::vector<double> y;

  size_t size() const { return y.size(); }

  std::span<const double> point(size_t i) const {
    assert(i < size());
    return std::span<const double>(x).subspan(i * static_cast<size_t>(d),
                                              static_cast<size_t>(d));
  }

  void Add(std::span<const double> xi, double yi) {
    assert(xi.size() == static_cast<size_t>(d));
    x.insert(x.end(), xi.begin(), xi.end());
    y.push_back(yi);
  }
};

}  // namespace ldp_partition

#endif  // LDP_PARTITION_DATASET_H_
