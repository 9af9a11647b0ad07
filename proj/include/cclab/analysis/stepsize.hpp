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

// Theoretical stepsizes of MARINA and EF21.

#ifndef CCLAB_ANALYSIS_STEPSIZE_HPP
#define CCLAB_ANALYSIS_STEPSIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "cclab/analysis/constants.hpp"
#include "cclab/compressors/spec.hpp"
#include "cclab/core/error.hpp"

namespace cclab {

enum class Objective { kNonconvex, kPL };

inline std::string to_string(Objective o) { return o == Objective::kPL ? "pl" : "nonconvex"; }

namespace detail {

inline double require_mu(const SmoothnessConstants& c) {
  if (!c.mu || *c.mu <= 0.0) throw InvalidArgument("PL stepsize requires a positive mu");
  return *c.mu;
}

inline void require_p(double p) {
  CCLAB_REQUIRE(p > 0.0 && p <= 1.0, "probability p must lie in (0, 1]");
}

/// gamma = 1 / (L- + sqrt(factor (1-p)/p * variance)), factor 1 or 2.
inline double marina_gamma(double l_minus, double variance, double p, double factor) {
  const double radical = std::sqrt(factor * (1.0 - p) / p * std::max(variance, 0.0));
  const double denom = l_minus + radical;
  CCLAB_REQUIRE(denom > 0.0, "stepsize: L- and the variance term are both zero");
  return 1.0 / denom;
}

}  // namespace detail

/// (A - B) L+^2 + B L+-^2
inline double marina_variance_term(const SmoothnessConstants& c, const ABConstants& ab) {
  return (ab.A - ab.B) * c.l_plus * c.l_plus + ab.B * c.l_pm * c.l_pm;
}

inline double marina_stepsize(const SmoothnessConstants& c, const ABConstants& ab, double p,
                              Objective objective) {
  detail::require_p(p);
  const double v = marina_variance_term(c, ab);
  if (objective == Objective::kNonconvex) return detail::marina_gamma(c.l_minus, v, p, 1.0);
  const double mu = detail::require_mu(c);
  return std::min(detail::marina_gamma(c.l_minus, v, p, 2.0), p / (2.0 * mu));
}

struct EF21Params {
  double theta = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// theta = 1 - sqrt(1 - alpha), beta = (1 - alpha) / theta.
inline EF21Params ef21_params(double alpha, const SmoothnessConstants& c, Objective objective) {
  CCLAB_REQUIRE(alpha > 0.0 && alpha <= 1.0, "ef21_params: alpha must lie in (0, 1]");
  EF21Params r;
  r.theta = 1.0 - std::sqrt(1.0 - alpha);
  r.beta = (1.0 - alpha) / r.theta;
  const double factor = objective == Objective::kPL ? 2.0 : 1.0;
  const double denom = c.l_minus + c.l_plus * std::sqrt(factor * r.beta / r.theta);
  CCLAB_REQUIRE(denom > 0.0, "ef21_params: L- and L+ are both zero");
  r.gamma = 1.0 / denom;
  if (objective == Objective::kPL) r.gamma = std::min(r.gamma, r.theta / (2.0 * detail::require_mu(c)));
  return r;
}

/// Compressor constants and smoothness of one group of workers.
struct GroupConstants {
  std::size_t size = 0;
  double A = 0.0;
  double B = 0.0;
  double l_plus = 0.0;
  double l_pm = 0.0;
};

/// sum_k ((A_k - B_k) |G_k|^2 / n^2) L+_k^2 + sum_k (B_k |G_k|^2 / n^2) L+-_k^2
inline double group_variance_term(std::span<const GroupConstants> groups, std::size_t n) {
  CCLAB_REQUIRE(!groups.empty(), "group_stepsize: no groups");
  std::size_t total = 0;
  double s = 0.0;
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  for (const auto& g : groups) {
    CCLAB_REQUIRE(g.size >= 1, "group_stepsize: empty group");
    CCLAB_REQUIRE(g.A >= g.B && g.B >= 0.0, "group_stepsize: requires A >= B >= 0");
    total += g.size;
    const double w = static_cast<double>(g.size) * static_cast<double>(g.size) / n2;
    s += w * ((g.A - g.B) * g.l_plus * g.l_plus + g.B * g.l_pm * g.l_pm);
  }
  CCLAB_REQUIRE(total == n, "group_stepsize: group sizes do not sum to n");
  return s;
}

inline double group_stepsize(std::span<const GroupConstants> groups, std::size_t n, double l_minus,
                             double p, Objective objective, std::optional<double> mu = {}) {
  detail::require_p(p);
  const double v = group_variance_term(groups, n);
  if (objective == Objective::kNonconvex) return detail::marina_gamma(l_minus, v, p, 1.0);
  if (!mu || *mu <= 0.0) throw InvalidArgument("PL stepsize requires a positive mu");
  return std::min(detail::marina_gamma(l_minus, v, p, 2.0), p / (2.0 * *mu));
}

}  // namespace cclab

#endif  // CCLAB_ANALYSIS_STEPSIZE_HPP
