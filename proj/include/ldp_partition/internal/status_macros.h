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

#ifndef LDP_PARTITION_INTERNAL_STATUS_MACROS_H_
#define LDP_PARTITION_INTERNAL_STATUS_MACROS_H_

#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define LDP_STATUS_CONCAT_INNER(a, b) a##b
#define LDP_STATUS_CONCAT(a, b) LDP_STATUS_CONCAT_INNER(a, b)

#define LDP_RETURN_IF_ERROR(expr)                 \
  do {                                            \
    if (absl::Status _ldp_status = (expr);        \
        !_ldp_status.ok()) {                      \
      return _ldp_status;                         \
    }                                             \
  } while (0)

#define LDP_ASSIGN_OR_RETURN_IMPL(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                              \
  if (!statusor.ok()) return std::move(statusor).status(); \
  lhs = std::move(statusor).value()

// Evaluates `rexpr` (a StatusOr), returning its status on error and
// assigning the value to `lhs` otherwise.
#define LDP_ASSIGN_OR_RETURN(lhs, rexpr) \
  LDP_ASSIGN_OR_RETURN_IMPL(             \
      LDP_STATUS_CONCAT(_ldp_statusor_, __LINE__), lhs, rexpr)

#endif  // LDP_PARTITION_INTERNAL_STATUS_MACROS_H_
