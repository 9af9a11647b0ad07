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

#ifndef CCLAB_COMPRESSORS_SPARSE_MESSAGE_HPP
#define CCLAB_COMPRESSORS_SPARSE_MESSAGE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cclab/core/error.hpp"
#include "cclab/core/vector_ops.hpp"

namespace cclab {

struct SparseEntry {
  std::uint32_t index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// A compressed vector as it travels from a worker to the server.
///
/// `payload_coords` is the number of reals actually transmitted; it always
/// equals entries.size(). Dense messages carry every coordinate.
struct SparseMessage {
  std::size_t dim = 0;
  std::vector<SparseEntry> entries;
  std::size_t payload_coords = 0;

  static SparseMessage dense(std::span<const double> x) {
    SparseMessage m;
    m.dim = x.size();
    m.entries.reserve(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
      m.entries.push_back({static_cast<std::uint32_t>(j), x[j]});
    m.payload_coords = x.size();
    return m;
  }

  static SparseMessage zero(std::size_t dim) {
    SparseMessage m;
    m.dim = dim;
    return m;
  }

  void push(std::uint32_t index, double value) {
    entries.push_back({index, value});
    payload_coords = entries.size();
  }

  Vector to_dense() const {
    Vector out(dim, 0.0);
    for (const auto& e : entries) out[e.index] = e.value;
    return out;
  }

  /// y += alpha * message
  void add_to(std::span<double> y, double alpha = 1.0) const {
    CCLAB_REQUIRE(y.size() == dim, "SparseMessage::add_to: dimension mismatch");
    for (const auto& e : entries) y[e.index] += alpha * e.value;
  }

  double norm_sq() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.value * e.value;
    return s;
  }

  /// Checks the type invariants: distinct in-range indices, consistent payload.
  bool valid() const {
    if (payload_coords != entries.size()) return false;
    std::vector<bool> seen(dim, false);
    for (const auto& e : entries) {
      if (e.index >= dim || seen[e.index]) return false;
      seen[e.index] = true;
    }
    return true;
  }

  friend bool operator==(const SparseMessage&, const SparseMessage&) = default;
};

}  // namespace cclab

#endif  // CCLAB_COMPRESSORS_SPARSE_MESSAGE_HPP
