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

// Distributed quadratics f_i(x) = 1/2 x^T A_i x - b_i^T x with
// A_i = s_i T + delta I, T = tridiag(-1, 2, -1), and the synthetic generator
// that controls their heterogeneity through a noise scale.

#ifndef CCLAB_PROBLEMS_QUADRATIC_HPP
#define CCLAB_PROBLEMS_QUADRATIC_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cclab/analysis/constants.hpp"
#include "cclab/analysis/eigen.hpp"
#include "cclab/core/error.hpp"
#include "cclab/core/rng.hpp"
#include "cclab/core/vector_ops.hpp"
#include "cclab/problems/problem.hpp"

namespace cclab {

struct QuadraticParams {
  std::size_t n = 10;
  std::size_t d = 100;
  double lambda = 1e-6;
  double noise_scale = 0.0;
  std::uint64_t seed = 0;
};

class QuadraticTask {
 public:
  QuadraticTask() = default;

  /// Builds a task from its stencil representation. All vectors must have
  /// consistent sizes; `params` is carried along as metadata.
  QuadraticTask(QuadraticParams params, std::vector<double> scales, double shift,
                std::vector<Vector> b, Vector x0)
      : params_(params), scales_(std::move(scales)), shift_(shift), b_(std::move(b)),
        x0_(std::move(x0)) {
    CCLAB_REQUIRE(!scales_.empty(), "QuadraticTask: no workers");
    CCLAB_REQUIRE(scales_.size() == b_.size(), "QuadraticTask: scales and b differ in length");
    CCLAB_REQUIRE(x0_.size() >= 1, "QuadraticTask: empty dimension");
    for (const auto& bi : b_) CCLAB_REQUIRE(bi.size() == x0_.size(), "QuadraticTask: b_i has wrong dimension");
    params_.n = scales_.size();
    params_.d = x0_.size();
    mean_scale_ = 0.0;
    for (double s : scales_) mean_scale_ += s;
    mean_scale_ /= static_cast<double>(scales_.size());
    mean_b_ = Vector(x0_.size(), 0.0);
    average_into(b_, mean_b_);
  }

  std::size_t workers() const { return scales_.size(); }
  std::size_t dim() const { return x0_.size(); }
  const QuadraticParams& params() const { return params_; }
  const std::vector<double>& scales() const { return scales_; }
  double shift() const { return shift_; }
  const std::vector<Vector>& b() const { return b_; }
  const Vector& mean_b() const { return mean_b_; }
  double mean_scale() const { return mean_scale_; }
  const Vector& initial_point() const { return x0_; }

  /// y = (s T + delta I) x in O(d).
  static void stencil_apply(double s, double delta, std::span<const double> x, std::span<double> y) {
    const std::size_t d = x.size();
    for (std::size_t j = 0; j < d; ++j) {
      double t = 2.0 * x[j];
      if (j > 0) t -= x[j - 1];
      if (j + 1 < d) t -= x[j + 1];
      y[j] = s * t + delta * x[j];
    }
  }

  void apply_worker(std::size_t i, std::span<const double> x, std::span<double> y) const {
    check(i, x, y.size());
    stencil_apply(scales_[i], shift_, x, y);
  }

  void apply_mean(std::span<const double> x, std::span<double> y) const {
    check(0, x, y.size());
    stencil_apply(mean_scale_, shift_, x, y);
  }

  void worker_gradient(std::size_t i, std::span<const double> x, std::span<double> g) const {
    apply_worker(i, x, g);
    const Vector& bi = b_[i];
    for (std::size_t j = 0; j < g.size(); ++j) g[j] -= bi[j];
  }

  double worker_value(std::size_t i, std::span<const double> x) const {
    check(i, x, x.size());
    return 0.5 * quad_form(scales_[i], x) - dot(b_[i], x);
  }

  /// Dense A_i, for verification on small d.
  Eigen::MatrixXd dense_matrix(std::size_t i) const {
    CCLAB_REQUIRE(i < workers(), "QuadraticTask: worker out of range");
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      m(j, j) = 2.0 * scales_[i] + shift_;
      if (j + 1 < d) m(j, j + 1) = m(j + 1, j) = -scales_[i];
    }
    return m;
  }

  /// f* and x*, once computed by f_star_quadratic.
  std::optional<double> known_f_star() const { return f_star_; }
  void set_f_star(double f) { f_star_ = f; }

 private:
  void check(std::size_t i, std::span<const double> x, std::size_t out) const {
    CCLAB_REQUIRE(i < workers(), "QuadraticTask: worker out of range");
    CCLAB_REQUIRE(x.size() == dim() && out == dim(), "QuadraticTask: dimension mismatch");
  }

  double quad_form(double s, std::span<const double> x) const {
    double diag = 0.0;
    double off = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      diag += x[j] * x[j];
      if (j + 1 < x.size()) off += x[j] * x[j + 1];
    }
    return s * (2.0 * diag - 2.0 * off) + shift_ * diag;
  }

  QuadraticParams params_;
  std::vector<double> scales_;
  double shift_ = 0.0;
  std::vector<Vector> b_;
  Vector x0_;
  Vector mean_b_;
  double mean_scale_ = 0.0;
  std::optional<double> f_star_;
};

/// lambda_min and lambda_max of the unshifted (s T) given a scalar s.
inline EigenRange scaled_stencil_range(double s, std::size_t d) {
  const auto t = stencil_eigen_range(d);
  return s >= 0.0 ? EigenRange{s * t.min, s * t.max} : EigenRange{s * t.max, s * t.min};
}

/// The synthetic generator: nu^s_i = 1 + s xi, nu^b_i = s xi',
/// b_i = (nu^s_i / 4)(-1 + nu^b_i, 0, ..., 0), A_i = (nu^s_i / 4) T, then all
/// A_i are shifted so that lambda_min(mean A_i) = lambda; x0 = (sqrt(d), 0, ...).
inline QuadraticTask generate_quadratic(const QuadraticParams& p) {
  CCLAB_REQUIRE(p.n >= 1, "generate_quadratic: n must be positive");
  CCLAB_REQUIRE(p.d >= 2, "generate_quadratic: d must be at least 2");
  CCLAB_REQUIRE(p.lambda > 0.0, "generate_quadratic: lambda must be positive");
  CCLAB_REQUIRE(p.noise_scale >= 0.0, "generate_quadratic: noise scale must be nonnegative");
  auto stream = KeyedStream::shared(p.seed, StreamTag::kTaskGenerator, 0);
  std::vector<double> scales(p.n);
  std::vector<Vector> b(p.n, Vector(p.d, 0.0));
  for (std::size_t i = 0; i < p.n; ++i) {
    const double nu_s = 1.0 + p.noise_scale * stream.normal();
    const double nu_b = p.noise_scale * stream.normal();
    scales[i] = nu_s / 4.0;
    b[i][0] = nu_s / 4.0 * (-1.0 + nu_b);
  }
  double mean_scale = 0.0;
  for (double s : scales) mean_scale += s;
  mean_scale /= static_cast<double>(p.n);
  const double shift = p.lambda - scaled_stencil_range(mean_scale, p.d).min;
  Vector x0(p.d, 0.0);
  x0[0] = std::sqrt(static_cast<double>(p.d));
  return QuadraticTask(p, std::move(scales), shift, std::move(b), std::move(x0));
}

/// Exact constants through the stencil spectrum. With A_i = s_i T + delta I
/// all A_i commute, so
///   L+-^2 = Var(s) lambda_max(T)^2,
///   L+^2  = max over t in spec(T) of mean (s_i t + delta)^2,
///   L-    = max over t in spec(T) of |mean(s) t + delta|,
/// where the maxima of these convex functions of t sit at the extreme
/// eigenvalues of T. mu = lambda_min(mean A_i).
inline SmoothnessConstants quadratic_task_constants(const QuadraticTask& task) {
  const auto t = stencil_eigen_range(task.dim());
  const double sbar = task.mean_scale();
  const double delta = task.shift();
  double var = 0.0;
  for (double s : task.scales()) var += (s - sbar) * (s - sbar);
  var /= static_cast<double>(task.workers());
  auto mean_sq_at = [&](double ev) {
    double acc = 0.0;
    for (double s : task.scales()) {
      const double v = s * ev + delta;
      acc += v * v;
    }
    return acc / static_cast<double>(task.workers());
  };
  SmoothnessConstants c;
  c.l_pm = std::sqrt(var) * t.max;
  c.l_plus = std::sqrt(std::max(mean_sq_at(t.min), mean_sq_at(t.max)));
  const double lo = sbar * t.min + delta;
  const double hi = sbar * t.max + delta;
  c.l_minus = std::max(std::fabs(lo), std::fabs(hi));
  const double lam_min = std::min(lo, hi);
  if (lam_min > 0.0) c.mu = lam_min;
  c.exact = true;
  return c;
}

/// The same constants from the dense matrices (small d only).
inline SmoothnessConstants quadratic_task_constants_dense(const QuadraticTask& task) {
  CCLAB_REQUIRE(task.dim() <= kDenseEigenLimit, "dense constants: dimension too large");
  std::vector<Eigen::MatrixXd> a;
  a.reserve(task.workers());
  for (std::size_t i = 0; i < task.workers(); ++i) a.push_back(task.dense_matrix(i));
  return quadratic_constants(a);
}

struct QuadraticSolution {
  double f_star = 0.0;
  Vector x_star;
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Conjugate gradient on (mean A_i) x = mean b_i until |residual| <= tol.
inline QuadraticSolution f_star_quadratic(const QuadraticTask& task, double tol = 1e-10,
                                          std::size_t max_iter = 0) {
  CCLAB_REQUIRE(tol > 0.0, "f_star_quadratic: tol must be positive");
  const std::size_t d = task.dim();
  if (max_iter == 0) max_iter = 50 * d + 100;
  QuadraticSolution sol;
  sol.x_star = Vector(d, 0.0);
  Vector r = task.mean_b();
  Vector p = r;
  Vector ap(d);
  double rr = norm_sq(r);
  std::size_t it = 0;
  while (std::sqrt(rr) > tol) {
    if (it == max_iter) throw ConvergenceError("f_star_quadratic: CG did not converge");
    task.apply_mean(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) throw ConvergenceError("f_star_quadratic: operator not positive definite");
    const double alpha = rr / pap;
    axpy(alpha, p, sol.x_star);
    axpy(-alpha, ap, r);
    const double rr_new = norm_sq(r);
    const double beta = rr_new / rr;
    for (std::size_t j = 0; j < d; ++j) p[j] = r[j] + beta * p[j];
    rr = rr_new;
    ++it;
    if (it % 50 == 0) {
      // Replace the recursive residual by the true one to stop drift.
      task.apply_mean(sol.x_star, ap);
      for (std::size_t j = 0; j < d; ++j) r[j] = task.mean_b()[j] - ap[j];
      rr = norm_sq(r);
    }
  }
  task.apply_mean(sol.x_star, ap);
  for (std::size_t j = 0; j < d; ++j) r[j] = task.mean_b()[j] - ap[j];
  sol.iterations = it;
  sol.residual = norm(r);
  sol.f_star = full_value(task, sol.x_star);
  return sol;
}

/// Copy of `task` with f* attached.
inline QuadraticTask with_f_star(QuadraticTask task, double tol = 1e-10) {
  task.set_f_star(f_star_quadratic(task, tol).f_star);
  return task;
}

}  // namespace cclab

#endif  // CCLAB_PROBLEMS_QUADRATIC_HPP
