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

#ifndef CCLAB_PROBLEMS_DENSE_QUADRATIC_HPP
#define CCLAB_PROBLEMS_DENSE_QUADRATIC_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cclab/core/error.hpp"
#include "cclab/core/rng.hpp"
#include "cclab/core/vector_ops.hpp"

namespace cclab {

/// f_i(x) = 1/2 x^T A_i x - b_i^T x with arbitrary dense symmetric A_i.
class DenseQuadratic {
 public:
  DenseQuadratic(std::vector<Eigen::MatrixXd> a, std::vector<Vector> b, Vector x0)
      : a_(std::move(a)), b_(std::move(b)), x0_(std::move(x0)) {
    CCLAB_REQUIRE(!a_.empty() && a_.size() == b_.size(), "DenseQuadratic: inconsistent worker count");
    const auto d = static_cast<Eigen::Index>(x0_.size());
    for (std::size_t i = 0; i < a_.size(); ++i) {
      CCLAB_REQUIRE(a_[i].rows() == d && a_[i].cols() == d, "DenseQuadratic: A_i has wrong shape");
      CCLAB_REQUIRE(b_[i].size() == x0_.size(), "DenseQuadratic: b_i has wrong dimension");
    }
  }

  /// Zero linear terms, x0 = 0.
  explicit DenseQuadratic(std::vector<Eigen::MatrixXd> a)
      : DenseQuadratic(a, std::vector<Vector>(a.size(), Vector(a.front().rows(), 0.0)),
                       Vector(a.front().rows(), 0.0)) {}

  std::size_t workers() const { return a_.size(); }
  std::size_t dim() const { return x0_.size(); }
  const std::vector<Eigen::MatrixXd>& matrices() const { return a_; }
  const Vector& initial_point() const { return x0_; }
  std::optional<double> known_f_star() const { return std::nullopt; }

  void worker_gradient(std::size_t i, std::span<const double> x, std::span<double> g) const {
    CCLAB_REQUIRE(i < workers() && x.size() == dim() && g.size() == dim(), "DenseQuadratic: bad call");
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
    Eigen::Map<const Eigen::VectorXd> bv(b_[i].data(), d);
    Eigen::Map<Eigen::VectorXd> gv(g.data(), d);
    gv.noalias() = a_[i] * xv - bv;
  }

  double worker_value(std::size_t i, std::span<const double> x) const {
    CCLAB_REQUIRE(i < workers() && x.size() == dim(), "DenseQuadratic: bad call");
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
    Eigen::Map<const Eigen::VectorXd> bv(b_[i].data(), d);
    return 0.5 * xv.dot(a_[i] * xv) - bv.dot(xv);
  }

 private:
  std::vector<Eigen::MatrixXd> a_;
  std::vector<Vector> b_;
  Vector x0_;
};

/// Symmetric matrix with i.i.d. N(0, 1) entries on and above the diagonal.
inline Eigen::MatrixXd random_symmetric(std::size_t d, KeyedStream& stream) {
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd m(dd, dd);
  for (Eigen::Index r = 0; r < dd; ++r)
    for (Eigen::Index c = r; c < dd; ++c) m(r, c) = m(c, r) = stream.normal();
  return m;
}

}  // namespace cclab

#endif  // CCLAB_PROBLEMS_DENSE_QUADRATIC_HPP
