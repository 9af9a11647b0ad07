// Copyright 2026 The cclab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Per-round records of a simulated run.

#ifndef CCLAB_ENGINE_TRACE_HPP
#define CCLAB_ENGINE_TRACE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cclab/core/vector_ops.hpp"

namespace cclab {

enum class Method { kMarina, kEF21, kGD };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::kMarina: return "marina";
    case Method::kEF21: return "ef21";
    case Method::kGD: return "gd";
  }
  return "?";
}

/// State after `round` iterations, i.e. at x^round.
struct TraceRecord {
  std::uint64_t round = 0;
  int theta = 0;                   // 1 when the round ending here was a full synchronization
  double cum_floats_per_node = 0;  // mean over nodes
  double cum_bits_per_node = 0;
  double grad_norm_sq = 0;         // |grad f(x^round)|^2
  double f_value = 0;
  std::optional<double> f_gap;

  bool operator==(const TraceRecord&) const = default;
};

struct RunTrace {
  Method method = Method::kGD;
  std::string compressor = "identity";
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  double gamma = 0;
  double p = 1;
  std::vector<TraceRecord> records;

  double cum_max_floats_per_node = 0;  // sum over rounds of the largest message
  bool diverged = false;
  std::optional<std::uint64_t> diverged_round;
  std::string diagnostic;

  std::uint64_t x_hat_round = 0;  // uniform over 0..T-1
  Vector x_hat;
  std::uint64_t best_round = 0;   // argmin of grad_norm_sq
  Vector x_final;

  const TraceRecord& last() const { return records.back(); }
};

}  // namespace cclab

#endif  // CCLAB_ENGINE_TRACE_HPP
