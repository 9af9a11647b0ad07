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

// Evaluates the convergence guarantees on completed traces.

#ifndef CCLAB_ENGINE_THEORY_CHECK_HPP
#define CCLAB_ENGINE_THEORY_CHECK_HPP

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "cclab/analysis/constants.hpp"
#include "cclab/analysis/stepsize.hpp"
#include "cclab/core/error.hpp"
#include "cclab/engine/trace.hpp"

namespace cclab {

struct TheoryReport {
  Objective objective = Objective::kNonconvex;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  std::uint64_t worst_round = 0;  // PL: round with the largest lhs / rhs
  std::string detail;
};

namespace detail {

inline void require_complete(const RunTrace& trace, std::size_t T) {
  CCLAB_REQUIRE(!trace.diverged, "theory_check: trace diverged");
  CCLAB_REQUIRE(trace.records.size() == T + 1, "theory_check: trace does not hold T + 1 records");
}

inline double initial_gap(const RunTrace& trace, std::optional<double> delta0) {
  if (delta0) return *delta0;
  const auto& gap = trace.records.front().f_gap;
  if (!gap) throw InvalidArgument("theory_check: f* unknown and no initial gap given");
  return *gap;
}

}  // namespace detail

/// Nonconvex: min_{t<T} |grad f(x^t)|^2 <= 2 Delta0 / (gamma T).
/// PL: f(x^t) - f* <= (1 - gamma mu)^t Delta0 for every recorded t <= T.
/// Delta0 defaults to the trace's initial f-gap.
inline TheoryReport theory_check(const RunTrace& trace, const SmoothnessConstants& c, double gamma,
                                 std::size_t T, Objective objective,
                                 std::optional<double> delta0 = {}) {
  CCLAB_REQUIRE(gamma > 0.0, "theory_check: gamma must be positive");
  CCLAB_REQUIRE(T >= 1, "theory_check: T must be positive");
  detail::require_complete(trace, T);
  TheoryReport r;
  r.objective = objective;
  const double d0 = detail::initial_gap(trace, delta0);
  if (objective == Objective::kNonconvex) {
    double best = trace.records.front().grad_norm_sq;
    for (std::size_t t = 0; t < T; ++t) best = std::min(best, trace.records[t].grad_norm_sq);
    r.lhs = best;
    r.rhs = 2.0 * d0 / (gamma * static_cast<double>(T));
    r.pass = r.lhs <= r.rhs;
    r.detail = "min_t |grad f|^2 vs 2 Delta0 / (gamma T)";
    return r;
  }
  if (!trace.records.front().f_gap) throw InvalidArgument("theory_check: PL mode needs f*");
  const double mu = detail::require_mu(c);
  const double rate = 1.0 - gamma * mu;
  CCLAB_REQUIRE(rate >= 0.0, "theory_check: gamma mu exceeds one");
  r.pass = true;
  double worst = -1.0;
  for (const auto& rec : trace.records) {
    const double bound = std::pow(rate, static_cast<double>(rec.round)) * d0;
    const double gap = *rec.f_gap;
    if (gap > bound) r.pass = false;
    const double ratio = bound > 0.0 ? gap / bound : (gap > 0.0 ? INFINITY : 0.0);
    if (ratio > worst) {
      worst = ratio;
      r.worst_round = rec.round;
      r.lhs = gap;
      r.rhs = bound;
    }
  }
  r.detail = "f(x^t) - f* vs (1 - gamma mu)^t Delta0 at every t";
  return r;
}

/// Average over runs of (1/T) sum_{t<T} |grad f(x^t)|^2, the expectation of
/// |grad f(x_hat)|^2 under the uniform output rule, against 2 Delta0 / (gamma T).
inline TheoryReport averaged_nonconvex_check(std::span<const RunTrace> traces, double gamma,
                                             std::size_t T, double delta0) {
  CCLAB_REQUIRE(!traces.empty(), "averaged_nonconvex_check: no traces");
  CCLAB_REQUIRE(gamma > 0.0 && T >= 1, "averaged_nonconvex_check: gamma and T must be positive");
  double total = 0.0;
  for (const auto& tr : traces) {
    detail::require_complete(tr, T);
    double s = 0.0;
    for (std::size_t t = 0; t < T; ++t) s += tr.records[t].grad_norm_sq;
    total += s / static_cast<double>(T);
  }
  TheoryReport r;
  r.lhs = total / static_cast<double>(traces.size());
  r.rhs = 2.0 * delta0 / (gamma * static_cast<double>(T));
  r.pass = r.lhs <= r.rhs;
  r.detail = "mean over runs and t of |grad f|^2 vs 2 Delta0 / (gamma T)";
  return r;
}

}  // namespace cclab

#endif  // CCLAB_ENGINE_THEORY_CHECK_HPP
