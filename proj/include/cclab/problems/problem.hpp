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

#ifndef CCLAB_PROBLEMS_PROBLEM_HPP
#define CCLAB_PROBLEMS_PROBLEM_HPP

#include <concepts>
#include <cstddef>
#include <span>

#include "cclab/core/error.hpp"
#include "cclab/core/vector_ops.hpp"

namespace cclab {

/// f(x) = (1/n) sum_i f_i(x), with f_i held by worker i.
template <class P>
concept DistributedProblem =
    requires(const P& p, std::size_t i, std::span<const double> x, std::span<double> g) {
      { p.workers() } -> std::convertible_to<std::size_t>;
      { p.dim() } -> std::convertible_to<std::size_t>;
      { p.worker_value(i, x) } -> std::convertible_to<double>;
      p.worker_gradient(i, x, g);
    };

/// f(x), summed over workers in ascending order.
template <DistributedProblem P>
double full_value(const P& p, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.workers(); ++i) s += p.worker_value(i, x);
  return s / static_cast<double>(p.workers());
}

/// Mean of equally sized vectors in ascending order; the single reduction
/// used everywhere a (1/n) sum over workers is formed.
inline void average_into(std::span<const Vector> parts, std::span<double> out) {
  CCLAB_REQUIRE(!parts.empty(), "average_into: no parts");
  for (double& v : out) v = 0.0;
  for (const Vector& part : parts) {
    CCLAB_REQUIRE(part.size() == out.size(), "average_into: dimension mismatch");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += part[j];
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (double& v : out) v *= inv;
}

template <DistributedProblem P>
Vector full_gradient(const P& p, std::span<const double> x) {
  std::vector<Vector> parts(p.workers(), Vector(p.dim()));
  for (std::size_t i = 0; i < p.workers(); ++i) p.worker_gradient(i, x, parts[i]);
  Vector g(p.dim());
  average_into(parts, g);
  return g;
}

}  // namespace cclab

#endif  // CCLAB_PROBLEMS_PROBLEM_HPP
