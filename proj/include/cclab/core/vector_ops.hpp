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

#ifndef CCLAB_CORE_VECTOR_OPS_HPP
#define CCLAB_CORE_VECTOR_OPS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cclab/core/error.hpp"

namespace cclab {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  CCLAB_REQUIRE(a.size() == b.size(), "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

inline double dist_sq(std::span<const double> a, std::span<const double> b) {
  CCLAB_REQUIRE(a.size() == b.size(), "dist_sq: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  CCLAB_REQUIRE(x.size() == y.size(), "axpy: dimension mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) y[j] += alpha * x[j];
}

inline void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Mean of equally sized vectors, summed in index order.
inline Vector mean_of(const std::vector<Vector>& vs) {
  CCLAB_REQUIRE(!vs.empty(), "mean_of: empty set");
  Vector out(vs.front().size(), 0.0);
  for (const Vector& v : vs) {
    CCLAB_REQUIRE(v.size() == out.size(), "mean_of: dimension mismatch");
    for (std::size_t j = 0; j < v.size(); ++j) out[j] += v[j];
  }
  const double inv = 1.0 / static_cast<double>(vs.size());
  for (double& v : out) v *= inv;
  return out;
}

}  // namespace cclab

#endif  // CCLAB_CORE_VECTOR_OPS_HPP
