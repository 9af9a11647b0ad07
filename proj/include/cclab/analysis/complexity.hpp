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

// Predicted communication complexity (floats sent per node to reach
// E|grad f|^2 <= eps, or f - f* <= eps under PL) with the hidden constant
// factor set to 1. Values are meant to be compared as ratios.

#ifndef CCLAB_ANALYSIS_COMPLEXITY_HPP
#define CCLAB_ANALYSIS_COMPLEXITY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cclab/analysis/constants.hpp"
#include "cclab/analysis/stepsize.hpp"
#include "cclab/core/error.hpp"

namespace cclab {

enum class Regime { kDGeN, kDLeN };

inline Regime regime_for(std::size_t d, std::size_t n) { return d >= n ? Regime::kDGeN : Regime::kDLeN; }

inline std::string to_string(Regime r) { return r == Regime::kDGeN ? "d_ge_n" : "d_le_n"; }

struct ComplexityQuery {
  Regime regime = Regime::kDGeN;
  Objective objective = Objective::kNonconvex;
  SmoothnessConstants constants;
  std::size_t d = 1;
  std::size_t n = 1;
  double delta0 = 0.0;
  double eps = 1.0;
};

enum class MethodKind { kMarinaPermK, kMarinaRandK, kEF21TopK };

inline std::string to_string(MethodKind m) {
  switch (m) {
    case MethodKind::kMarinaPermK: return "marina_permk";
    case MethodKind::kMarinaRandK: return "marina_randk";
    case MethodKind::kEF21TopK: return "ef21_topk";
  }
  return "?";
}

struct MethodParams {
  MethodKind kind = MethodKind::kMarinaPermK;
  double p = 1.0;     // MARINA
  std::size_t k = 0;  // RandK / TopK
};

struct ComplexityResult {
  MethodParams params;
  double value = 0.0;
  bool approximate = false;
};

namespace detail {

inline void validate_query(const ComplexityQuery& q) {
  CCLAB_REQUIRE(q.eps > 0.0, "complexity: eps must be positive");
  CCLAB_REQUIRE(q.delta0 >= 0.0, "complexity: delta0 must be nonnegative");
  CCLAB_REQUIRE(q.d >= 1 && q.n >= 1, "complexity: d and n must be positive");
  CCLAB_REQUIRE(q.regime != Regime::kDGeN || q.d >= q.n, "complexity: regime d_ge_n requires d >= n");
  CCLAB_REQUIRE(q.regime != Regime::kDLeN || q.d <= q.n, "complexity: regime d_le_n requires d <= n");
  if (q.objective == Objective::kPL)
    CCLAB_REQUIRE(q.constants.mu && *q.constants.mu > 0.0, "complexity: PL objective requires mu");
}

struct CostAndRate {
  double cost;   // expected floats per node per round
  double rate;   // L- + (compression penalty) for the chosen objective
  double extra;  // PL only: the second argument of max{., .}
};

inline CostAndRate cost_and_rate(const ComplexityQuery& q, const MethodParams& m) {
  const double d = static_cast<double>(q.d);
  const double n = static_cast<double>(q.n);
  const auto& c = q.constants;
  const double factor = q.objective == Objective::kPL ? 2.0 : 1.0;
  switch (m.kind) {
    case MethodKind::kMarinaPermK: {
      require_p(m.p);
      const double odds = factor * (1.0 - m.p) / m.p;
      if (q.regime == Regime::kDGeN)
        return {m.p * d + (1.0 - m.p) * d / n, c.l_minus + std::sqrt(odds) * c.l_pm, 1.0 / m.p};
      const double shrink = q.n == q.d ? 1.0 : (d - 1.0) / (n - 1.0);
      return {m.p * d + (1.0 - m.p), c.l_minus + std::sqrt(odds * shrink) * c.l_pm, 1.0 / m.p};
    }
    case MethodKind::kMarinaRandK: {
      require_p(m.p);
      CCLAB_REQUIRE(m.k >= 1 && m.k <= q.d, "complexity: RandK requires 1 <= k <= d");
      const double k = static_cast<double>(m.k);
      const double odds = factor * (1.0 - m.p) / m.p;
      return {m.p * d + (1.0 - m.p) * k, c.l_minus + std::sqrt(odds * (d / k - 1.0) / n) * c.l_plus,
              1.0 / m.p};
    }
    case MethodKind::kEF21TopK: {
      CCLAB_REQUIRE(m.k >= 1 && m.k <= q.d, "complexity: TopK requires 1 <= k <= d");
      const double k = static_cast<double>(m.k);
      const double penalty = (d - k + std::sqrt(d * d - d * k)) / k;
      return {k, c.l_minus + c.l_plus * penalty, 1.0 / (1.0 - std::sqrt(1.0 - k / d))};
    }
  }
  throw Unsupported("complexity: unknown method");
}

}  // namespace detail

inline ComplexityResult comm_complexity(const ComplexityQuery& q, const MethodParams& m) {
  detail::validate_query(q);
  const auto cr = detail::cost_and_rate(q, m);
  ComplexityResult r;
  r.params = m;
  if (q.objective == Objective::kNonconvex) {
    r.value = q.delta0 / q.eps * cr.cost * cr.rate;
  } else {
    const double log_term = std::max(0.0, std::log(q.delta0 / q.eps));
    r.value = log_term * cr.cost * std::max(cr.rate / *q.constants.mu, cr.extra);
  }
  if (m.kind == MethodKind::kMarinaPermK)
    r.approximate = q.regime == Regime::kDGeN ? q.d % q.n != 0 : q.n % q.d != 0;
  return r;
}

/// Candidate parameter sets prescribed by the optimal-parameter lemmas.
inline std::vector<MethodParams> candidate_params(const ComplexityQuery& q, MethodKind kind) {
  std::vector<MethodParams> out;
  const double d = static_cast<double>(q.d);
  switch (kind) {
    case MethodKind::kMarinaPermK:
      out.push_back({kind, q.regime == Regime::kDGeN ? 1.0 / static_cast<double>(q.n) : 1.0 / d, 0});
      out.push_back({kind, 1.0, 0});
      break;
    case MethodKind::kMarinaRandK:
      if (q.regime == Regime::kDGeN) {
        const auto k_max = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(d / std::sqrt(static_cast<double>(q.n)))));
        for (std::size_t k = 1; k <= std::min(k_max, q.d); ++k)
          out.push_back({kind, static_cast<double>(k) / d, k});
      } else {
        out.push_back({kind, 1.0 / d, 1});
      }
      out.push_back({kind, 1.0, q.d});
      break;
    case MethodKind::kEF21TopK:
      for (std::size_t k = q.d; k >= 1; --k) out.push_back({kind, 1.0, k});
      break;
  }
  return out;
}

/// The candidate with the smallest predicted complexity (first one on ties).
inline ComplexityResult optimal_params(const ComplexityQuery& q, MethodKind kind) {
  detail::validate_query(q);
  ComplexityResult best;
  bool have = false;
  for (const auto& m : candidate_params(q, kind)) {
    const auto r = comm_complexity(q, m);
    if (!have || r.value < best.value) {
      best = r;
      have = true;
    }
  }
  return best;
}

}  // namespace cclab

#endif  // CCLAB_ANALYSIS_COMPLEXITY_HPP
