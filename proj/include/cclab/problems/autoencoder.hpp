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

// Linear autoencoder on sharded data:
//   f_i(D, E) = (1/|S_i|) sum_{a in S_i} |D E a - a|^2 + (lambda/2) |D E - I|_F^2,
// D is d_f x d_e, E is d_e x d_f, and the parameter vector is D then E, both
// row-major.

#ifndef CCLAB_PROBLEMS_AUTOENCODER_HPP
#define CCLAB_PROBLEMS_AUTOENCODER_HPP

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
#include "cclab/core/error.hpp"
#include "cclab/core/rng.hpp"
#include "cclab/core/vector_ops.hpp"
#include "cclab/problems/idx.hpp"
#include "cclab/problems/problem.hpp"

namespace cclab {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Items split into n + 1 equal random shards D_0..D_n; worker i holds D_0
/// with probability p_hat and D_{i+1} otherwise.
struct DatasetSplit {
  std::vector<std::vector<std::uint32_t>> shards;  // n + 1 shards of item indices
  std::vector<std::uint32_t> assignment;           // worker -> shard id
  double p_hat = 0.0;
};

/// Equal shards of floor(items / (n + 1)); leftover items are unused.
inline DatasetSplit split_heterogeneous(std::size_t items, std::size_t n, double p_hat,
                                        std::uint64_t seed) {
  CCLAB_REQUIRE(n >= 1, "split_heterogeneous: n must be positive");
  CCLAB_REQUIRE(p_hat >= 0.0 && p_hat <= 1.0, "split_heterogeneous: p_hat must lie in [0, 1]");
  if (items < n + 1) throw InvalidArgument("split_heterogeneous: insufficient data for n + 1 shards");
  auto perm_stream = KeyedStream::shared(seed, StreamTag::kDataSplit, 0);
  const auto perm = fisher_yates(items, perm_stream);
  const std::size_t size = items / (n + 1);
  DatasetSplit s;
  s.p_hat = p_hat;
  s.shards.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    s.shards[k].assign(perm.begin() + static_cast<std::ptrdiff_t>(k * size),
                       perm.begin() + static_cast<std::ptrdiff_t>((k + 1) * size));
  s.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto coin = KeyedStream::private_to(seed, StreamTag::kDataSplit, 1, i);
    s.assignment[i] = coin.uniform() < p_hat ? 0U : static_cast<std::uint32_t>(i + 1);
  }
  return s;
}

/// Row-major data set, one item of `features` values per row.
struct Dataset {
  std::size_t features = 0;
  std::vector<double> values;

  std::size_t size() const { return features == 0 ? 0 : values.size() / features; }
  std::span<const double> item(std::size_t k) const {
    return {values.data() + k * features, features};
  }
};

/// Images scaled to [0, 1] by dividing by 255.
inline Dataset dataset_from_idx(const IdxTensor& images) {
  CCLAB_REQUIRE(images.magic == kIdxImagesMagic, "dataset_from_idx: not an image tensor");
  Dataset ds;
  ds.features = images.item_size();
  ds.values.reserve(images.data.size());
  for (std::uint8_t v : images.data) ds.values.push_back(static_cast<double>(v) / 255.0);
  return ds;
}

/// Gaussian mixture with `clusters` centres uniform in [0, 1]^features and
/// per-coordinate noise `spread`, clipped to [0, 1].
inline Dataset synthetic_mixture(std::size_t items, std::size_t features, std::size_t clusters,
                                 double spread, std::uint64_t seed) {
  CCLAB_REQUIRE(features >= 1 && clusters >= 1, "synthetic_mixture: bad shape");
  auto stream = KeyedStream::shared(seed, StreamTag::kSyntheticData, 0);
  std::vector<double> centres(clusters * features);
  for (double& c : centres) c = stream.uniform();
  Dataset ds;
  ds.features = features;
  ds.values.resize(items * features);
  for (std::size_t k = 0; k < items; ++k) {
    const std::size_t c = stream.below(clusters);
    for (std::size_t j = 0; j < features; ++j) {
      const double v = centres[c * features + j] + spread * stream.normal();
      ds.values[k * features + j] = std::clamp(v, 0.0, 1.0);
    }
  }
  return ds;
}

struct AutoencoderParams {
  std::size_t n = 100;
  std::size_t d_f = 64;
  std::size_t d_e = 4;
  double lambda = 0.0;
  double p_hat = 0.5;
  std::uint64_t seed = 0;
  std::string idx_path;               // empty: synthetic mixture
  std::size_t items_per_shard = 20;   // synthetic only
  std::size_t clusters = 10;          // synthetic only
  double spread = 0.1;                // synthetic only
};

class AutoencoderTask {
 public:
  AutoencoderTask(std::size_t d_f, std::size_t d_e, double lambda, Dataset data, DatasetSplit split,
                  Vector x0)
      : d_f_(d_f), d_e_(d_e), lambda_(lambda), data_(std::move(data)), split_(std::move(split)),
        x0_(std::move(x0)) {
    CCLAB_REQUIRE(d_f_ >= 1 && d_e_ >= 1, "AutoencoderTask: empty shapes");
    CCLAB_REQUIRE(lambda_ >= 0.0, "AutoencoderTask: lambda must be nonnegative");
    CCLAB_REQUIRE(data_.features == d_f_, "AutoencoderTask: data features differ from d_f");
    CCLAB_REQUIRE(!split_.assignment.empty(), "AutoencoderTask: no workers");
    CCLAB_REQUIRE(x0_.size() == dim(), "AutoencoderTask: x0 has wrong dimension");
    for (const auto& shard : split_.shards) {
      CCLAB_REQUIRE(!shard.empty(), "AutoencoderTask: empty shard");
      for (auto k : shard) CCLAB_REQUIRE(k < data_.size(), "AutoencoderTask: shard index out of range");
    }
    for (auto s : split_.assignment)
      CCLAB_REQUIRE(s < split_.shards.size(), "AutoencoderTask: assignment out of range");
  }

  std::size_t workers() const { return split_.assignment.size(); }
  std::size_t dim() const { return 2 * d_f_ * d_e_; }
  std::size_t d_f() const { return d_f_; }
  std::size_t d_e() const { return d_e_; }
  double lambda() const { return lambda_; }
  const Dataset& data() const { return data_; }
  const DatasetSplit& split() const { return split_; }
  const Vector& initial_point() const { return x0_; }
  std::optional<double> known_f_star() const { return std::nullopt; }

  const std::vector<std::uint32_t>& shard_of(std::size_t i) const {
    return split_.shards[split_.assignment[i]];
  }

  double worker_value(std::size_t i, std::span<const double> x) const {
    check(i, x.size());
    const auto [dm, em] = views(x);
    double loss = 0.0;
    const auto& shard = shard_of(i);
    Eigen::VectorXd code(static_cast<Eigen::Index>(d_e_));
    for (auto k : shard) {
      const Eigen::Map<const Eigen::VectorXd> a(data_.item(k).data(), static_cast<Eigen::Index>(d_f_));
      code.noalias() = em * a;
      loss += (dm * code - a).squaredNorm();
    }
    loss /= static_cast<double>(shard.size());
    if (lambda_ > 0.0) loss += 0.5 * lambda_ * (dm * em - identity()).squaredNorm();
    return loss;
  }

  /// dD = (2/m) sum r (E a)^T + lambda (DE - I) E^T,
  /// dE = (2/m) sum D^T r a^T + lambda D^T (DE - I), with r = DEa - a.
  void worker_gradient(std::size_t i, std::span<const double> x, std::span<double> g) const {
    check(i, x.size());
    CCLAB_REQUIRE(g.size() == dim(), "AutoencoderTask: gradient buffer has wrong size");
    const auto [dm, em] = views(x);
    const auto fe = static_cast<Eigen::Index>(d_f_);
    const auto ee = static_cast<Eigen::Index>(d_e_);
    Eigen::Map<RowMatrix> gd(g.data(), fe, ee);
    Eigen::Map<RowMatrix> ge(g.data() + d_f_ * d_e_, ee, fe);
    gd.setZero();
    ge.setZero();
    const auto& shard = shard_of(i);
    Eigen::VectorXd code(ee), r(fe), back(ee);
    for (auto k : shard) {
      const Eigen::Map<const Eigen::VectorXd> a(data_.item(k).data(), fe);
      code.noalias() = em * a;
      r.noalias() = dm * code;
      r -= a;
      gd.noalias() += r * code.transpose();
      back.noalias() = dm.transpose() * r;
      ge.noalias() += back * a.transpose();
    }
    const double w = 2.0 / static_cast<double>(shard.size());
    gd *= w;
    ge *= w;
    if (lambda_ > 0.0) {
      const RowMatrix resid = dm * em - identity();
      gd.noalias() += lambda_ * resid * em.transpose();
      ge.noalias() += lambda_ * dm.transpose() * resid;
    }
  }

 private:
  using ConstMap = Eigen::Map<const RowMatrix>;

  std::pair<ConstMap, ConstMap> views(std::span<const double> x) const {
    const auto fe = static_cast<Eigen::Index>(d_f_);
    const auto ee = static_cast<Eigen::Index>(d_e_);
    return {ConstMap(x.data(), fe, ee), ConstMap(x.data() + d_f_ * d_e_, ee, fe)};
  }

  RowMatrix identity() const {
    const auto fe = static_cast<Eigen::Index>(d_f_);
    return RowMatrix::Identity(fe, fe);
  }

  void check(std::size_t i, std::size_t xs) const {
    CCLAB_REQUIRE(i < workers(), "AutoencoderTask: worker out of range");
    CCLAB_REQUIRE(xs == dim(), "AutoencoderTask: parameter vector has wrong size");
  }

  std::size_t d_f_;
  std::size_t d_e_;
  double lambda_;
  Dataset data_;
  DatasetSplit split_;
  Vector x0_;
};

/// Xavier-normal initialization of D and E: N(0, 2 / (d_f + d_e)).
inline Vector xavier_initial_point(std::size_t d_f, std::size_t d_e, std::uint64_t seed) {
  auto stream = KeyedStream::shared(seed, StreamTag::kInitialPoint, 0);
  const double sd = std::sqrt(2.0 / static_cast<double>(d_f + d_e));
  Vector x(2 * d_f * d_e);
  for (double& v : x) v = sd * stream.normal();
  return x;
}

inline AutoencoderTask make_autoencoder(const AutoencoderParams& p) {
  CCLAB_REQUIRE(p.n >= 1 && p.d_e >= 1, "make_autoencoder: n and d_e must be positive");
  Dataset data;
  std::size_t d_f = p.d_f;
  if (!p.idx_path.empty()) {
    data = dataset_from_idx(load_idx_images(p.idx_path));
    d_f = data.features;
  } else {
    CCLAB_REQUIRE(p.d_f >= 1 && p.items_per_shard >= 1, "make_autoencoder: bad synthetic shape");
    data = synthetic_mixture((p.n + 1) * p.items_per_shard, p.d_f, p.clusters, p.spread, p.seed);
  }
  auto split = split_heterogeneous(data.size(), p.n, p.p_hat, p.seed);
  auto x0 = xavier_initial_point(d_f, p.d_e, p.seed);
  return AutoencoderTask(d_f, p.d_e, p.lambda, std::move(data), std::move(split), std::move(x0));
}

struct LocalSmoothnessOptions {
  std::size_t iterations = 60;
  double step = 1e-5;
  std::uint64_t seed = 3;
};

namespace detail {

/// Largest |eigenvalue| of the Hessian of `grad` at x, by power iteration on
/// central-difference Hessian-vector products.
template <class GradFn>
double local_hessian_norm(std::size_t d, std::span<const double> x, GradFn&& grad,
                          const LocalSmoothnessOptions& opt) {
  KeyedStream stream(opt.seed);
  Vector v(d), xp(d), xm(d), gp(d), gm(d), hv(d);
  for (double& t : v) t = stream.normal();
  double nv = norm(v);
  for (double& t : v) t /= nv;
  double estimate = 0.0;
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    for (std::size_t j = 0; j < d; ++j) {
      xp[j] = x[j] + opt.step * v[j];
      xm[j] = x[j] - opt.step * v[j];
    }
    grad(xp, gp);
    grad(xm, gm);
    for (std::size_t j = 0; j < d; ++j) hv[j] = (gp[j] - gm[j]) / (2.0 * opt.step);
    nv = norm(hv);
    estimate = nv;
    if (nv == 0.0) break;
    for (std::size_t j = 0; j < d; ++j) v[j] = hv[j] / nv;
  }
  return estimate;
}

}  // namespace detail

/// Local estimates at x: L- from f, L_i from each f_i, and the pessimistic
/// L+^2 = L+-^2 = mean L_i^2. Flagged inexact.
template <DistributedProblem P>
SmoothnessConstants estimate_local_constants(const P& task, std::span<const double> x,
                                             const LocalSmoothnessOptions& opt = {}) {
  const std::size_t d = task.dim();
  const double l_minus = detail::local_hessian_norm(
      d, x, [&](std::span<const double> y, std::span<double> g) {
        const Vector full = full_gradient(task, y);
        std::copy(full.begin(), full.end(), g.begin());
      }, opt);
  std::vector<double> l_i(task.workers());
  for (std::size_t i = 0; i < task.workers(); ++i)
    l_i[i] = detail::local_hessian_norm(
        d, x, [&](std::span<const double> y, std::span<double> g) { task.worker_gradient(i, y, g); }, opt);
  return pessimistic_constants(l_minus, l_i);
}

}  // namespace cclab

#endif  // CCLAB_PROBLEMS_AUTOENCODER_HPP
