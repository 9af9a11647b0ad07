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

// Deterministic synchronous simulation of MARINA, EF21 and gradient descent
// with per-node communication metering.

#ifndef CCLAB_ENGINE_ENGINE_HPP
#define CCLAB_ENGINE_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cclab/compressors/compressors.hpp"
#include "cclab/core/error.hpp"
#include "cclab/core/parallel.hpp"
#include "cclab/core/rng.hpp"
#include "cclab/core/vector_ops.hpp"
#include "cclab/engine/trace.hpp"
#include "cclab/problems/problem.hpp"

namespace cclab {

struct Metering {
  unsigned bits_per_coordinate = 32;
  bool count_index_bits = false;  // TopK messages also pay ceil(log2 d) bits per index
};

struct RunConfig {
  Method method = Method::kMarina;
  CompressorSpec compressor;
  double gamma = 0.0;
  double p = 1.0;  // MARINA synchronization probability
  std::size_t T = 0;
  std::uint64_t master_seed = 0;
  Metering metering;
  std::size_t threads = 1;
  std::optional<double> f_star;  // overrides the task's own f*
  double divergence_limit = 1e12;
};

/// Everything an observer may inspect after round `round` has been formed.
/// `messages` is empty on synchronization rounds and for GD.
struct RoundView {
  std::uint64_t round = 0;  // index of the new iterate
  bool theta = false;
  std::span<const double> x_prev;
  std::span<const double> x;
  std::span<const double> g_prev;
  std::span<const double> g;
  std::span<const Vector> estimators_prev;  // g_i before the update
  std::span<const Vector> estimators;       // g_i after the update
  std::span<const Vector> gradients;        // grad f_i(x)
  std::span<const Vector> gradients_prev;   // grad f_i(x_prev)
  std::span<const SparseMessage> messages;
};

using RoundObserver = std::function<void(const RoundView&)>;

namespace detail {

template <DistributedProblem P>
std::optional<double> task_f_star(const P& p) {
  if constexpr (requires { { p.known_f_star() } -> std::convertible_to<std::optional<double>>; })
    return p.known_f_star();
  else
    return std::nullopt;
}

template <DistributedProblem P>
Vector task_initial_point(const P& p) {
  if constexpr (requires { p.initial_point(); }) {
    const auto& x0 = p.initial_point();
    return Vector(x0.begin(), x0.end());
  } else {
    return Vector(p.dim(), 0.0);
  }
}

template <DistributedProblem P>
class Simulation {
 public:
  Simulation(const P& task, const RunConfig& cfg, std::span<const double> x0)
      : task_(task), cfg_(cfg), n_(task.workers()), d_(task.dim()),
        f_star_(cfg.f_star ? cfg.f_star : task_f_star(task)) {
    CCLAB_REQUIRE(n_ >= 1 && d_ >= 1, "run: task has no workers or no coordinates");
    CCLAB_REQUIRE(cfg.gamma >= 0.0 && std::isfinite(cfg.gamma), "run: gamma must be finite and nonnegative");
    CCLAB_REQUIRE(x0.size() == d_, "run: initial point has wrong dimension");
    trace_.method = cfg.method;
    trace_.compressor = cfg.method == Method::kGD ? "identity" : label(cfg.compressor);
    trace_.n = n_;
    trace_.d = d_;
    trace_.seed = cfg.master_seed;
    trace_.gamma = cfg.gamma;
    trace_.p = cfg.method == Method::kMarina ? cfg.p : 1.0;
    x_.assign(x0.begin(), x0.end());
    grads_.assign(n_, Vector(d_));
    grad_.assign(d_, 0.0);
    if (cfg.T > 0) {
      auto s = KeyedStream::shared(cfg.master_seed, StreamTag::kOutputChoice, 0);
      trace_.x_hat_round = s.below(cfg.T);
    }
  }

  RunTrace& trace() { return trace_; }
  const Vector& x() const { return x_; }
  const Vector& grad() const { return grad_; }
  std::vector<Vector>& grads() { return grads_; }
  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }

  /// grad f_i at x_ for every worker, then their mean.
  void evaluate_gradients() {
    parallel_for(n_, cfg_.threads, [&](std::size_t i) { task_.worker_gradient(i, x_, grads_[i]); });
    average_into(grads_, grad_);
  }

  /// Appends the record for x_; returns false when the run has diverged.
  bool record(std::uint64_t round, bool theta) {
    TraceRecord r;
    r.round = round;
    r.theta = theta ? 1 : 0;
    r.cum_floats_per_node = cum_floats_;
    r.cum_bits_per_node = cum_bits_;
    r.grad_norm_sq = norm_sq(grad_);
    r.f_value = full_value(task_, x_);
    if (f_star_) r.f_gap = r.f_value - *f_star_;
    const double limit = cfg_.divergence_limit;
    if (!all_finite(x_) || !std::isfinite(r.f_value) || !std::isfinite(r.grad_norm_sq) ||
        norm(x_) > limit || std::fabs(r.f_value) > limit) {
      trace_.diverged = true;
      trace_.diverged_round = round;
      trace_.diagnostic = "diverged at round " + std::to_string(round) +
                          ": iterate or objective is non-finite or exceeds the limit (stepsize too large?)";
      return false;
    }
    if (round == trace_.x_hat_round || cfg_.T == 0) trace_.x_hat = x_;
    if (trace_.records.empty() || r.grad_norm_sq < trace_.records[trace_.best_round].grad_norm_sq)
      trace_.best_round = round;
    trace_.records.push_back(r);
    return true;
  }

  /// Adds one round of messages; payload[i] coordinates and extra_bits[i] from worker i.
  void meter(std::span<const std::size_t> payload, std::span<const std::uint64_t> extra_bits) {
    double floats = 0.0;
    double bits = 0.0;
    std::size_t largest = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      floats += static_cast<double>(payload[i]);
      bits += static_cast<double>(payload[i]) * cfg_.metering.bits_per_coordinate +
              static_cast<double>(extra_bits[i]);
      largest = std::max(largest, payload[i]);
    }
    cum_floats_ += floats / static_cast<double>(n_);
    cum_bits_ += bits / static_cast<double>(n_);
    trace_.cum_max_floats_per_node += static_cast<double>(largest);
  }

  void meter_dense() {
    std::vector<std::size_t> payload(n_, d_);
    std::vector<std::uint64_t> none(n_, 0);
    meter(payload, none);
  }

  /// x <- x - gamma g
  void step(std::span<const double> g) {
    x_prev_ = x_;
    axpy(-cfg_.gamma, g, x_);
  }

  const Vector& x_prev() const { return x_prev_; }

  RunTrace finish() {
    trace_.x_final = x_;
    if (trace_.x_hat.empty()) trace_.x_hat = x_;
    return std::move(trace_);
  }

 private:
  const P& task_;
  const RunConfig& cfg_;
  std::size_t n_;
  std::size_t d_;
  std::optional<double> f_star_;
  Vector x_, x_prev_;
  std::vector<Vector> grads_;
  Vector grad_;
  double cum_floats_ = 0.0;
  double cum_bits_ = 0.0;
  RunTrace trace_;
};

}  // namespace detail

/// x^{t+1} = x^t - gamma grad f(x^t), every worker sending its full gradient.
template <DistributedProblem P>
RunTrace run_gd(const P& task, const RunConfig& cfg, const RoundObserver& observer = {}) {
  const Vector x0 = detail::task_initial_point(task);
  detail::Simulation<P> sim(task, cfg, x0);
  sim.evaluate_gradients();
  if (!sim.record(0, false)) return sim.finish();
  std::vector<Vector> grads_prev;
  for (std::size_t t = 0; t < cfg.T; ++t) {
    const Vector g_prev = sim.grad();
    if (observer) grads_prev = sim.grads();
    sim.step(g_prev);
    sim.evaluate_gradients();
    sim.meter_dense();
    if (observer) {
      RoundView v;
      v.round = t + 1;
      v.theta = true;
      v.x_prev = sim.x_prev();
      v.x = sim.x();
      v.g_prev = g_prev;
      v.g = sim.grad();
      v.gradients = sim.grads();
      v.gradients_prev = grads_prev;
      observer(v);
    }
    if (!sim.record(t + 1, true)) break;
  }
  return sim.finish();
}

template <DistributedProblem P>
RunTrace run_gd(const P& task, double gamma, std::size_t T) {
  RunConfig cfg;
  cfg.method = Method::kGD;
  cfg.gamma = gamma;
  cfg.T = T;
  return run_gd(task, cfg);
}

/// MARINA: g^0 = grad f(x^0); each round flips a shared coin theta_t ~ Be(p).
/// On theta_t = 1 worker i sends grad f_i(x^{t+1}) (d floats), otherwise
/// C_i(grad f_i(x^{t+1}) - grad f_i(x^t)) and forms g_i = g^t + message.
template <DistributedProblem P>
RunTrace run_marina(const P& task, const RunConfig& cfg, const RoundObserver& observer = {}) {
  CCLAB_REQUIRE(cfg.p > 0.0 && cfg.p <= 1.0, "run_marina: p must lie in (0, 1]");
  const std::size_t n = task.workers();
  const std::size_t d = task.dim();
  validate(cfg.compressor, n, d);
  const Vector x0 = detail::task_initial_point(task);
  detail::Simulation<P> sim(task, cfg, x0);
  sim.evaluate_gradients();
  Vector g = sim.grad();
  std::vector<Vector> estimators = sim.grads();
  std::vector<Vector> grads_prev = sim.grads();
  std::vector<Vector> estimators_prev;
  std::vector<SparseMessage> messages(n);
  std::vector<std::size_t> payload(n);
  std::vector<std::uint64_t> extra(n);
  if (!sim.record(0, false)) return sim.finish();

  for (std::size_t t = 0; t < cfg.T; ++t) {
    auto coin = KeyedStream::shared(cfg.master_seed, StreamTag::kSyncCoin, t);
    const bool theta = coin.bernoulli(cfg.p);
    std::swap(grads_prev, sim.grads());
    if (observer) estimators_prev = estimators;
    const Vector g_prev = g;
    sim.step(g_prev);
    sim.evaluate_gradients();
    const auto& grads = sim.grads();
    if (theta) {
      for (std::size_t i = 0; i < n; ++i) estimators[i] = grads[i];
      sim.meter_dense();
    } else {
      const Draw draw = draw_shared(cfg.compressor, n, d, cfg.master_seed, t);
      parallel_for(n, cfg.threads, [&](std::size_t i) {
        Vector diff(d);
        for (std::size_t j = 0; j < d; ++j) diff[j] = grads[i][j] - grads_prev[i][j];
        messages[i] = compress(cfg.compressor, diff, RoundContext{cfg.master_seed, t, i, n, d}, draw);
        estimators[i] = g_prev;
        messages[i].add_to(estimators[i]);
      });
      for (std::size_t i = 0; i < n; ++i) {
        payload[i] = messages[i].payload_coords;
        extra[i] = index_bits(cfg.compressor, d, payload[i], cfg.metering.count_index_bits);
      }
      sim.meter(payload, extra);
    }
    average_into(estimators, g);
    if (observer) {
      RoundView v;
      v.round = t + 1;
      v.theta = theta;
      v.x_prev = sim.x_prev();
      v.x = sim.x();
      v.g_prev = g_prev;
      v.g = g;
      v.estimators_prev = estimators_prev;
      v.estimators = estimators;
      v.gradients = grads;
      v.gradients_prev = grads_prev;
      if (!theta) v.messages = messages;
      observer(v);
    }
    if (!sim.record(t + 1, theta)) break;
  }
  return sim.finish();
}

/// EF21 with a contractive selection compressor (TopK or identity):
/// x^{t+1} = x^t - gamma g^t, g_i^{t+1} = g_i^t + C(grad f_i(x^{t+1}) - g_i^t).
/// The compressor transmits exact coordinates of the difference, so the
/// memory takes the value of grad f_i(x^{t+1}) on the transmitted indices.
template <DistributedProblem P>
RunTrace run_ef21(const P& task, const RunConfig& cfg, const RoundObserver& observer = {}) {
  const std::size_t n = task.workers();
  const std::size_t d = task.dim();
  validate(cfg.compressor, n, d);
  CCLAB_REQUIRE(cfg.compressor.kind == CompressorKind::kTopK || cfg.compressor.kind == CompressorKind::kIdentity,
                "run_ef21: compressor must be TopK or identity");
  const Vector x0 = detail::task_initial_point(task);
  detail::Simulation<P> sim(task, cfg, x0);
  sim.evaluate_gradients();
  std::vector<Vector> estimators = sim.grads();
  std::vector<Vector> estimators_prev;
  std::vector<Vector> grads_prev;
  Vector g(d);
  average_into(estimators, g);
  std::vector<SparseMessage> messages(n);
  std::vector<std::size_t> payload(n);
  std::vector<std::uint64_t> extra(n);
  if (!sim.record(0, false)) return sim.finish();

  for (std::size_t t = 0; t < cfg.T; ++t) {
    if (observer) {
      estimators_prev = estimators;
      grads_prev = sim.grads();
    }
    const Vector g_prev = g;
    sim.step(g_prev);
    sim.evaluate_gradients();
    const auto& grads = sim.grads();
    parallel_for(n, cfg.threads, [&](std::size_t i) {
      Vector diff(d);
      for (std::size_t j = 0; j < d; ++j) diff[j] = grads[i][j] - estimators[i][j];
      messages[i] = compress(cfg.compressor, diff, RoundContext{cfg.master_seed, t, i, n, d}, Draw{});
      for (const auto& e : messages[i].entries) estimators[i][e.index] = grads[i][e.index];
    });
    for (std::size_t i = 0; i < n; ++i) {
      payload[i] = messages[i].payload_coords;
      extra[i] = index_bits(cfg.compressor, d, payload[i], cfg.metering.count_index_bits);
    }
    sim.meter(payload, extra);
    average_into(estimators, g);
    if (observer) {
      RoundView v;
      v.round = t + 1;
      v.x_prev = sim.x_prev();
      v.x = sim.x();
      v.g_prev = g_prev;
      v.g = g;
      v.estimators_prev = estimators_prev;
      v.estimators = estimators;
      v.gradients = grads;
      v.gradients_prev = grads_prev;
      v.messages = messages;
      observer(v);
    }
    if (!sim.record(t + 1, false)) break;
  }
  return sim.finish();
}

template <DistributedProblem P>
RunTrace run(const P& task, const RunConfig& cfg, const RoundObserver& observer = {}) {
  switch (cfg.method) {
    case Method::kMarina: return run_marina(task, cfg, observer);
    case Method::kEF21: return run_ef21(task, cfg, observer);
    case Method::kGD: return run_gd(task, cfg, observer);
  }
  throw InvalidArgument("run: unknown method");
}

}  // namespace cclab

#endif  // CCLAB_ENGINE_ENGINE_HPP
