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

// Extreme eigenvalues of symmetric operators: shifted power iteration on a
// matrix-free oracle, and a dense fallback through Eigen.

#ifndef CCLAB_ANALYSIS_EIGEN_HPP
#define CCLAB_ANALYSIS_EIGEN_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "cclab/core/error.hpp"
#include "cclab/core/rng.hpp"
#include "cclab/core/vector_ops.hpp"

namespace cclab {

/// Symmetric linear map given by y = A x, with a bound radius_bound() >= |lambda|
/// for every eigenvalue (a Gershgorin or norm bound).
template <class Op>
concept SymmetricOperator = requires(const Op& op, std::span<const double> x, std::span<double> y) {
  { op.dim() } -> std::convertible_to<std::size_t>;
  { op.radius_bound() } -> std::convertible_to<double>;
  op.apply(x, y);
};

enum class Extreme { kMax, kMin };

struct EigOptions {
  double tol = 1e-10;
  std::size_t max_iter = 200000;
  std::uint64_t seed = 0x5EED;
};

/// Dense symmetric matrix as a SymmetricOperator.
class DenseOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd m) : m_(std::move(m)) {
    CCLAB_REQUIRE(m_.rows() == m_.cols() && m_.rows() > 0, "DenseOperator: matrix must be square");
  }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  void apply(std::span<const double> x, std::span<double> y) const {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), m_.rows());
    Eigen::Map<Eigen::VectorXd> yv(y.data(), m_.rows());
    yv.noalias() = m_ * xv;
  }
  double radius_bound() const { return m_.cwiseAbs().rowwise().sum().maxCoeff(); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

/// Wraps a callable y = A x.
class FunctionOperator {
 public:
  using Apply = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionOperator(std::size_t dim, Apply apply, double radius)
      : dim_(dim), apply_(std::move(apply)), radius_(radius) {}
  std::size_t dim() const { return dim_; }
  void apply(std::span<const double> x, std::span<double> y) const { apply_(x, y); }
  double radius_bound() const { return radius_; }

 private:
  std::size_t dim_;
  Apply apply_;
  double radius_;
};

/// lambda_max by power iteration on A + cI, lambda_min on cI - A, where c is
/// the radius bound; both shifted operators are positive semidefinite. Stops
/// when the eigen-residual |Av - rho v| falls below tol * max(|rho|, tiny).
template <SymmetricOperator Op>
double eig_extreme(const Op& op, Extreme which, const EigOptions& opt = {}) {
  CCLAB_REQUIRE(opt.tol > 0.0, "eig_extreme: tol must be positive");
  const std::size_t d = op.dim();
  CCLAB_REQUIRE(d >= 1, "eig_extreme: empty operator");
  const double c = std::max(op.radius_bound(), 0.0);
  const double sign = which == Extreme::kMax ? 1.0 : -1.0;

  KeyedStream stream(opt.seed);
  Vector v(d), av(d), w(d);
  for (double& x : v) x = stream.normal();
  double nv = norm(v);
  for (double& x : v) x /= nv;

  const double floor = 1e-300 + opt.tol * c * 1e-6;
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    op.apply(v, av);
    const double rho = dot(v, av);
    double res = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = av[j] - rho * v[j];
      res += r * r;
    }
    res = std::sqrt(res);
    if (res <= opt.tol * std::max(std::fabs(rho), floor)) return rho;
    // w = (sign * A + cI) v
    for (std::size_t j = 0; j < d; ++j) w[j] = sign * av[j] + c * v[j];
    nv = norm(w);
    if (nv == 0.0) return rho;  // v lies in the kernel of the shifted operator
    for (std::size_t j = 0; j < d; ++j) v[j] = w[j] / nv;
  }
  throw ConvergenceError("eig_extreme: no convergence within " + std::to_string(opt.max_iter) +
                         " iterations");
}

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

/// Both extremes of a dense symmetric matrix (LAPACK-style tridiagonal QR).
inline EigenRange dense_eigen_range(const Eigen::MatrixXd& m) {
  CCLAB_REQUIRE(m.rows() == m.cols() && m.rows() > 0, "dense_eigen_range: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("dense_eigen_range: solver failed");
  const auto& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

inline constexpr std::size_t kDenseEigenLimit = 4096;

/// Materializes op column by column.
template <SymmetricOperator Op>
Eigen::MatrixXd materialize(const Op& op) {
  const std::size_t d = op.dim();
  Eigen::MatrixXd m(d, d);
  Vector e(d, 0.0), col(d);
  for (std::size_t j = 0; j < d; ++j) {
    e[j] = 1.0;
    op.apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < d; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return m;
}

/// Dense solve up to kDenseEigenLimit, power iteration above.
template <SymmetricOperator Op>
EigenRange eigen_range(const Op& op, const EigOptions& opt = {}) {
  if (op.dim() <= kDenseEigenLimit) return dense_eigen_range(materialize(op));
  return {eig_extreme(op, Extreme::kMin, opt), eig_extreme(op, Extreme::kMax, opt)};
}

/// Eigenvalues of the scaled second-difference stencil tridiag(-1, 2, -1):
/// 2 - 2 cos(k pi / (d + 1)), k = 1..d.
inline EigenRange stencil_eigen_range(std::size_t d) {
  CCLAB_REQUIRE(d >= 1, "stencil_eigen_range: d must be positive");
  const double h = std::acos(-1.0) / static_cast<double>(d + 1);
  // 2 - 2cos(t) = 4 sin^2(t/2), which keeps full relative precision near 0.
  const double lo = std::sin(0.5 * h);
  const double hi = std::sin(0.5 * h * static_cast<double>(d));
  return {4.0 * lo * lo, 4.0 * hi * hi};
}

}  // namespace cclab

#endif  // CCLAB_ANALYSIS_EIGEN_HPP
