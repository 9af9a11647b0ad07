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

// Empirical verification of the AB inequality, by exhaustive enumeration of
// the randomness space or by Monte Carlo.

#ifndef CCLAB_COMPRESSORS_AB_CHECK_HPP
#define CCLAB_COMPRESSORS_AB_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "cclab/compressors/compressors.hpp"
#include "cclab/core/error.hpp"
#include "cclab/core/vector_ops.hpp"

namespace cclab {

struct ABGap {
  double lhs = 0.0;         // E|mean C_i(a_i) - mean a_i|^2
  double rhs = 0.0;         // A mean|a_i|^2 - B |mean a_i|^2
  double lhs_stderr = 0.0;  // zero in exhaustive mode
  std::size_t outcomes = 0;
};

namespace detail {

inline std::size_t saturating_mul(std::size_t a, std::size_t b, std::size_t cap) {
  if (a == 0 || b == 0) return 0;
  if (a > cap / b) return cap + 1;
  return a * b;
}

inline std::size_t factorial_capped(std::size_t m, std::size_t cap) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= m && f <= cap; ++i) f = saturating_mul(f, i, cap);
  return f;
}

inline std::vector<std::vector<std::uint32_t>> all_subsets(std::size_t d, std::size_t k,
                                                           std::size_t cap) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0U);
  while (true) {
    out.push_back(idx);
    if (out.size() > cap) throw Unsupported("enumeration space too large");
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == d - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

inline Permutation identity_permutation(std::size_t len) {
  Permutation p(len);
  std::iota(p.begin(), p.end(), 0U);
  return p;
}

}  // namespace detail

/// Calls fn(draw, probability) for every equally likely realization of the
/// shared and private randomness of `spec`. Throws Unsupported when the space
/// has more than max_outcomes elements or is not enumerable.
inline void enumerate_draws(const CompressorSpec& spec, std::size_t n, std::size_t d,
                            const std::function<void(const Draw&, double)>& fn,
                            std::size_t max_outcomes = 1'000'000) {
  validate(spec, n, d);
  auto too_large = [] { throw Unsupported("enumeration space too large"); };
  switch (spec.kind) {
    case CompressorKind::kIdentity:
    case CompressorKind::kTopK: fn(Draw{}, 1.0); return;
    case CompressorKind::kPermKBigD: {
      const bool remainder = d % n != 0;
      std::size_t total = detail::factorial_capped(d, max_outcomes);
      if (remainder) total = detail::saturating_mul(total, detail::factorial_capped(n, max_outcomes), max_outcomes);
      if (total > max_outcomes) too_large();
      const double w = 1.0 / static_cast<double>(total);
      Draw draw;
      draw.coord_perm = detail::identity_permutation(d);
      do {
        if (remainder) {
          draw.worker_perm = detail::identity_permutation(n);
          do fn(draw, w);
          while (std::next_permutation(draw.worker_perm.begin(), draw.worker_perm.end()));
        } else {
          fn(draw, w);
        }
      } while (std::next_permutation(draw.coord_perm.begin(), draw.coord_perm.end()));
      return;
    }
    case CompressorKind::kPermKBigN:
    case CompressorKind::kBlockPerm: {
      const std::size_t total = detail::factorial_capped(n, max_outcomes);
      if (total > max_outcomes) too_large();
      const double w = 1.0 / static_cast<double>(total);
      Draw draw;
      draw.worker_perm = detail::identity_permutation(n);
      do fn(draw, w);
      while (std::next_permutation(draw.worker_perm.begin(), draw.worker_perm.end()));
      return;
    }
    case CompressorKind::kRandK: {
      const auto subsets = detail::all_subsets(d, spec.k, max_outcomes);
      if (spec.shared) {
        const double w = 1.0 / static_cast<double>(subsets.size());
        Draw draw;
        for (const auto& s : subsets) {
          draw.shared_subset = s;
          fn(draw, w);
        }
        return;
      }
      std::size_t total = 1;
      for (std::size_t i = 0; i < n; ++i) total = detail::saturating_mul(total, subsets.size(), max_outcomes);
      if (total > max_outcomes) too_large();
      const double w = 1.0 / static_cast<double>(total);
      std::vector<std::size_t> digit(n, 0);
      Draw draw;
      draw.worker_subsets.assign(n, subsets.front());
      while (true) {
        for (std::size_t i = 0; i < n; ++i) draw.worker_subsets[i] = subsets[digit[i]];
        fn(draw, w);
        std::size_t i = 0;
        while (i < n && ++digit[i] == subsets.size()) digit[i++] = 0;
        if (i == n) break;
      }
      return;
    }
    case CompressorKind::kComposed:
      if (spec.quantizer == QuantizerKind::kNone) {
        enumerate_draws(*spec.inner, n, d, fn, max_outcomes);
        return;
      }
      throw Unsupported("enumerate_draws: quantizer randomness is not enumerated");
  }
}

namespace detail {

inline double ab_rhs(const ABConstants& c, const std::vector<Vector>& a, const Vector& mean) {
  double mean_sq = 0.0;
  for (const auto& ai : a) mean_sq += norm_sq(ai);
  mean_sq /= static_cast<double>(a.size());
  return c.A * mean_sq - c.B * norm_sq(mean);
}

inline double aggregate_error(const CompressorSpec& spec, const std::vector<Vector>& a,
                              const Vector& mean, const Draw& draw, std::uint64_t seed,
                              std::uint64_t round) {
  const std::size_t n = a.size();
  const std::size_t d = mean.size();
  Vector agg(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const RoundContext ctx{seed, round, i, n, d};
    compress(spec, a[i], ctx, draw).add_to(agg);
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : agg) v *= inv;
  return dist_sq(agg, mean);
}

inline void check_inputs(const std::vector<Vector>& a) {
  CCLAB_REQUIRE(!a.empty(), "empirical_ab_gap: no inputs");
  for (const auto& ai : a)
    CCLAB_REQUIRE(ai.size() == a.front().size() && !ai.empty(),
                  "empirical_ab_gap: inputs must share a positive dimension");
}

}  // namespace detail

/// Exact expectation over the full randomness space.
inline ABGap empirical_ab_gap_exhaustive(const CompressorSpec& spec, const std::vector<Vector>& a,
                                         std::size_t max_outcomes = 1'000'000) {
  detail::check_inputs(a);
  const std::size_t n = a.size();
  const std::size_t d = a.front().size();
  const Vector mean = mean_of(a);
  ABGap gap;
  enumerate_draws(
      spec, n, d,
      [&](const Draw& draw, double w) {
        gap.lhs += w * detail::aggregate_error(spec, a, mean, draw, 0, 0);
        ++gap.outcomes;
      },
      max_outcomes);
  gap.rhs = detail::ab_rhs(ab_constants(spec, n, d), a, mean);
  return gap;
}

/// Monte Carlo estimate using rounds 0..trials-1 of the keyed streams.
inline ABGap empirical_ab_gap_monte_carlo(const CompressorSpec& spec, const std::vector<Vector>& a,
                                          std::size_t trials, std::uint64_t seed) {
  detail::check_inputs(a);
  CCLAB_REQUIRE(trials >= 2, "empirical_ab_gap: need at least two trials");
  const std::size_t n = a.size();
  const std::size_t d = a.front().size();
  validate(spec, n, d);
  const Vector mean = mean_of(a);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Draw draw = draw_shared(spec, n, d, seed, t);
    const double e = detail::aggregate_error(spec, a, mean, draw, seed, t);
    sum += e;
    sum_sq += e * e;
  }
  const double m = static_cast<double>(trials);
  ABGap gap;
  gap.lhs = sum / m;
  gap.lhs_stderr = std::sqrt(std::max(0.0, sum_sq / m - gap.lhs * gap.lhs) / (m - 1.0));
  gap.outcomes = trials;
  gap.rhs = detail::ab_rhs(ab_constants(spec, n, d), a, mean);
  return gap;
}

/// Exact E[C_i(x)] for every worker, from enumerate_draws.
inline std::vector<Vector> exact_expectation(const CompressorSpec& spec,
                                             const std::vector<Vector>& a,
                                             std::size_t max_outcomes = 1'000'000) {
  detail::check_inputs(a);
  const std::size_t n = a.size();
  const std::size_t d = a.front().size();
  std::vector<Vector> out(n, Vector(d, 0.0));
  enumerate_draws(
      spec, n, d,
      [&](const Draw& draw, double w) {
        for (std::size_t i = 0; i < n; ++i)
          compress(spec, a[i], RoundContext{0, 0, i, n, d}, draw).add_to(out[i], w);
      },
      max_outcomes);
  return out;
}

}  // namespace cclab

#endif  // CCLAB_COMPRESSORS_AB_CHECK_HPP
