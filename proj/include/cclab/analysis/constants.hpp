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

// Smoothness constants L-, L+, L+- (Hessian variance) and mu.

#ifndef CCLAB_ANALYSIS_CONSTANTS_HPP
#define CCLAB_ANALYSIS_CONSTANTS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cclab/analysis/eigen.hpp"
#include "cclab/core/error.hpp"
#include "cclab/core/rng.hpp"
#include "cclab/core/vector_ops.hpp"
#include "cclab/problems/problem.hpp"

namespace cclab {

struct SmoothnessConstants {
  double l_minus = 0.0;
  double l_plus = 0.0;
  double l_pm = 0.0;
  std::optional<double> mu;
  bool exact = true;

  /// L- <= L+ and L+^2 - L-^2 <= L+-^2 <= L+^2, within tol; mu <= L-.
  bool satisfies_chain(double tol = 1e-9) const {
    const double lm2 = l_minus * l_minus;
    const double lp2 = l_plus * l_plus;
    const double lpm2 = l_pm * l_pm;
    const double scale = std::max(1.0, lp2);
    bool ok = l_minus <= l_plus + tol * std::max(1.0, l_plus);
    ok = ok && lp2 - lm2 <= lpm2 + tol * scale;
    ok = ok && lpm2 <= lp2 + tol * scale;
    if (mu) ok = ok && *mu <= l_minus + tol * std::max(1.0, l_minus);
    return ok;
  }
};

/// Exact constants of f_i(x) = 1/2 x^T A_i x - b_i^T x:
///   L+-^2 = lambda_max(mean A_i^2 - Abar^2), L+^2 = lambda_max(mean A_i^2),
///   L-^2 = lambda_max(Abar^2).
/// mu is set to lambda_min(Abar) when Abar is positive definite.
inline SmoothnessConstants quadratic_constants(const std::vector<Eigen::MatrixXd>& a) {
  CCLAB_REQUIRE(!a.empty(), "quadratic_constants: no matrices");
  const Eigen::Index d = a.front().rows();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd mean_sq = Eigen::MatrixXd::Zero(d, d);
  for (const auto& ai : a) {
    CCLAB_REQUIRE(ai.rows() == d && ai.cols() == d, "quadratic_constants: dimension mismatch");
    CCLAB_REQUIRE(ai.isApprox(ai.transpose(), 1e-12) || ai.isZero(), "quadratic_constants: matrix not symmetric");
    mean += ai;
    mean_sq += ai * ai;
  }
  const double inv = 1.0 / static_cast<double>(a.size());
  mean *= inv;
  mean_sq *= inv;
  const Eigen::MatrixXd mean_of_sq = mean * mean;
  Eigen::MatrixXd var = mean_sq - mean_of_sq;
  var = 0.5 * (var + var.transpose());

  SmoothnessConstants c;
  const auto r_mean = dense_eigen_range(mean);
  c.l_minus = std::max(std::fabs(r_mean.min), std::fabs(r_mean.max));
  c.l_plus = std::sqrt(std::max(0.0, dense_eigen_range(0.5 * (mean_sq + mean_sq.transpose())).max));
  c.l_pm = std::sqrt(std::max(0.0, dense_eigen_range(var).max));
  if (r_mean.min > 0.0) c.mu = r_mean.min;
  c.exact = true;
  return c;
}

/// Pessimistic constants from per-worker smoothness constants L_i and the
/// smoothness constant L- of f: L+^2 = L+-^2 = mean L_i^2, L- capped at L+.
inline SmoothnessConstants pessimistic_constants(double l_minus, std::span<const double> l_i) {
  CCLAB_REQUIRE(!l_i.empty(), "pessimistic_constants: no worker constants");
  double s = 0.0;
  for (double l : l_i) s += l * l;
  s /= static_cast<double>(l_i.size());
  SmoothnessConstants c;
  c.l_plus = std::sqrt(s);
  c.l_minus = std::min(l_minus, c.l_plus);
  c.l_pm = c.l_plus;
  c.exact = false;
  return c;
}

struct HessianVarianceSampling {
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  double radius = 1.0;  // sampled points are x0 + radius * N(0, I/d)
  bool coordinate_pairs = true;
  std::vector<Vector> extra_directions;  // pairs (x0, x0 + v) for each v
};

namespace detail {

/// Differences t_i = grad f_i(x) - grad f_i(y) are centred on t_0 before the
/// variance is formed, so identical workers give exactly zero.
template <DistributedProblem P>
double hessian_variance_ratio(const P& p, std::span<const double> x, std::span<const double> y,
                              std::vector<Vector>& gx, std::vector<Vector>& gy) {
  const std::size_t n = p.workers();
  const std::size_t d = p.dim();
  const double dxy = dist_sq(x, y);
  if (dxy == 0.0) return -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    p.worker_gradient(i, x, gx[i]);
    p.worker_gradient(i, y, gy[i]);
    for (std::size_t j = 0; j < d; ++j) gx[i][j] -= gy[i][j];
  }
  Vector shifted_mean(d, 0.0);
  double local = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double u = gx[i][j] - gx[0][j];
      local += u * u;
      shifted_mean[j] += u;
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  local *= inv;
  for (double& v : shifted_mean) v *= inv;
  return (local - norm_sq(shifted_mean)) / dxy;
}

}  // namespace detail

/// max over sampled pairs of
///   [ (1/n) sum |grad f_i(x) - grad f_i(y)|^2 - |grad f(x) - grad f(y)|^2 ] / |x - y|^2,
/// a lower bound on L+-^2. Pairs with x = y are skipped.
template <DistributedProblem P>
double empirical_hessian_variance(const P& p, std::span<const double> x0,
                                  const HessianVarianceSampling& cfg = {}) {
  const std::size_t n = p.workers();
  const std::size_t d = p.dim();
  CCLAB_REQUIRE(x0.size() == d, "empirical_hessian_variance: x0 has wrong dimension");
  std::vector<Vector> gx(n, Vector(d)), gy(n, Vector(d));
  double best = 0.0;
  Vector x(d), y(d);
  auto consider = [&] {
    const double r = detail::hessian_variance_ratio(p, x, y, gx, gy);
    best = std::max(best, r);
  };
  if (cfg.coordinate_pairs) {
    for (std::size_t j = 0; j < std::min(d, cfg.samples); ++j) {
      std::copy(x0.begin(), x0.end(), x.begin());
      y = x;
      y[j] += 1.0;
      consider();
    }
  }
  for (const Vector& v : cfg.extra_directions) {
    CCLAB_REQUIRE(v.size() == d, "empirical_hessian_variance: direction has wrong dimension");
    std::copy(x0.begin(), x0.end(), x.begin());
    for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + v[j];
    consider();
  }
  auto stream = KeyedStream::shared(cfg.seed, StreamTag::kPairSampling, 0);
  const double s = cfg.radius / std::sqrt(static_cast<double>(d));
  for (std::size_t t = 0; t < cfg.samples; ++t) {
    for (std::size_t j = 0; j < d; ++j) x[j] = x0[j] + s * stream.normal();
    for (std::size_t j = 0; j < d; ++j) y[j] = x0[j] + s * stream.normal();
    consider();
  }
  return best;
}

}  // namespace cclab

#endif  // CCLAB_ANALYSIS_CONSTANTS_HPP
