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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cclab/analysis/constants.hpp"
#include "cclab/analysis/stepsize.hpp"
#include "cclab/compressors/ab_check.hpp"
#include "cclab/engine/engine.hpp"
#include "cclab/engine/theory_check.hpp"
#include "cclab/problems/dense_quadratic.hpp"
#include "cclab/problems/quadratic.hpp"

namespace cclab {
namespace {

RunConfig marina(CompressorSpec c, double gamma, double p, std::size_t T, std::uint64_t seed) {
  RunConfig cfg;
  cfg.method = Method::kMarina;
  cfg.compressor = std::move(c);
  cfg.gamma = gamma;
  cfg.p = p;
  cfg.T = T;
  cfg.master_seed = seed;
  return cfg;
}

DenseQuadratic tiny_family(std::size_t n, std::size_t d, std::uint64_t seed) {
  KeyedStream s(seed);
  std::vector<Eigen::MatrixXd> a;
  std::vector<Vector> b;
  const Eigen::MatrixXd common = random_symmetric(d, s);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd m = common * common.transpose() + 0.3 * random_symmetric(d, s) +
                        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    a.push_back(m);
    Vector bi(d);
    for (double& v : bi) v = s.normal();
    b.push_back(bi);
  }
  Vector x0(d);
  for (double& v : x0) v = s.normal();
  return DenseQuadratic(a, b, x0);
}

TEST(Gd, ZeroStepKeepsPoint) {
  const auto task = generate_quadratic({4, 10, 1e-2, 0.2, 1});
  const auto tr = run_gd(task, 0.0, 5);
  ASSERT_EQ(tr.records.size(), 6U);
  EXPECT_EQ(tr.x_final, task.initial_point());
  for (const auto& r : tr.records) EXPECT_EQ(r.f_value, tr.records[0].f_value);
}

TEST(Gd, ZeroRoundsSingleRecord) {
  const auto task = generate_quadratic({4, 10, 1e-2, 0.2, 1});
  const auto tr = run_gd(task, 0.5, 0);
  ASSERT_EQ(tr.records.size(), 1U);
  EXPECT_EQ(tr.records[0].round, 0U);
  EXPECT_EQ(tr.records[0].cum_floats_per_node, 0.0);
  EXPECT_EQ(tr.x_hat, task.initial_point());
}

TEST(Gd, MonotoneGradientWithInverseSmoothness) {
  const auto task = generate_quadratic({5, 200, 1e-3, 0.5, 7});
  const auto c = quadratic_task_constants(task);
  const auto tr = run_gd(task, 1.0 / c.l_minus, 300);
  for (std::size_t t = 1; t < tr.records.size(); ++t) {
    EXPECT_LE(tr.records[t].grad_norm_sq, tr.records[t - 1].grad_norm_sq * (1 + 1e-12));
    EXPECT_EQ(tr.records[t].cum_floats_per_node, 200.0 * static_cast<double>(t));
    EXPECT_EQ(tr.records[t].cum_bits_per_node, 32.0 * 200.0 * static_cast<double>(t));
  }
}

TEST(Marina, SyncEveryRoundIsGd) {
  const auto task = generate_quadratic({10, 100, 1e-6, 0.2, 3});
  const double gamma = 1.0 / quadratic_task_constants(task).l_minus;
  const auto gd = run_gd(task, gamma, 100);
  const auto m = run_marina(task, marina(CompressorSpec::permk_big_d(), gamma, 1.0, 100, 9));
  ASSERT_EQ(m.records.size(), gd.records.size());
  EXPECT_EQ(m.x_final, gd.x_final);
  for (std::size_t t = 0; t < gd.records.size(); ++t) {
    EXPECT_EQ(m.records[t].grad_norm_sq, gd.records[t].grad_norm_sq);
    EXPECT_EQ(m.records[t].cum_floats_per_node, gd.records[t].cum_floats_per_node);
  }
}

TEST(Marina, PermKReassemblesIdenticalWorkers) {
  const auto task = generate_quadratic({10, 100, 1e-6, 0.0, 5});
  const double gamma = 1.0 / quadratic_task_constants(task).l_minus;
  int checked = 0;
  const auto tr = run_marina(task, marina(CompressorSpec::permk_big_d(), gamma, 0.1, 200, 2), [&](const RoundView& v) {
    Vector mean(v.x.size());
    average_into(v.gradients, mean);
    for (std::size_t j = 0; j < mean.size(); ++j) EXPECT_NEAR(v.g[j], mean[j], 1e-12);
    ++checked;
  });
  EXPECT_EQ(checked, 200);
  EXPECT_FALSE(tr.diverged);
}

TEST(Marina, IncrementalEstimatorAndMetering) {
  const auto task = generate_quadratic({7, 30, 1e-3, 0.3, 1});
  const std::size_t d = 30;
  double floats = 0.0;
  std::vector<double> cum;
  int syncs = 0;
  const auto cfg = marina(CompressorSpec::permk_big_d(), 0.05, 0.3, 300, 4);
  const auto tr = run_marina(task, cfg, [&](const RoundView& v) {
    if (v.theta) {
      ++syncs;
      EXPECT_TRUE(v.messages.empty());
      floats += static_cast<double>(d);
      for (std::size_t i = 0; i < v.estimators.size(); ++i) EXPECT_EQ(v.estimators[i], v.gradients[i]);
    } else {
      double payload = 0.0;
      Vector inc(v.g_prev.begin(), v.g_prev.end());
      for (const auto& m : v.messages) {
        payload += static_cast<double>(m.payload_coords);
        EXPECT_EQ(m.payload_coords, m.entries.size());
        m.add_to(inc, 1.0 / 7.0);
      }
      floats += payload / 7.0;
      for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(inc[j], v.g[j], 1e-12);
    }
    cum.push_back(floats);
  });
  ASSERT_EQ(tr.records.size(), 301U);
  EXPECT_GT(syncs, 50);
  for (std::size_t t = 1; t < tr.records.size(); ++t) {
    EXPECT_NEAR(tr.records[t].cum_floats_per_node, cum[t - 1], 1e-9);
    EXPECT_GE(tr.records[t].cum_floats_per_node, tr.records[t - 1].cum_floats_per_node);
    const double step = tr.records[t].cum_floats_per_node - tr.records[t - 1].cum_floats_per_node;
    if (tr.records[t].theta == 1) {
      EXPECT_NEAR(step, 30.0, 1e-9);
    } else {
      EXPECT_NEAR(step, 30.0 / 7.0, 1e-9);
    }
  }
}

TEST(Marina, ReproducibleAcrossThreads) {
  const auto task = generate_quadratic({9, 50, 1e-3, 0.5, 2});
  auto cfg = marina(CompressorSpec::randk(3), 0.02, 0.2, 100, 11);
  const auto a = run_marina(task, cfg);
  cfg.threads = 4;
  const auto b = run_marina(task, cfg);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.x_final, b.x_final);
  EXPECT_EQ(a.x_hat_round, b.x_hat_round);
  cfg.master_seed = 12;
  EXPECT_NE(run_marina(task, cfg).x_final, a.x_final);
}

TEST(Marina, ConditionallyUnbiasedEstimator) {
  const auto task = tiny_family(3, 4, 8);
  for (const auto& spec : {CompressorSpec::permk_big_d(), CompressorSpec::randk(2), CompressorSpec::randk(1, true)}) {
    int checked = 0;
    run_marina(task, marina(spec, 0.02, 0.5, 20, 3), [&](const RoundView& v) {
      std::vector<Vector> diffs(3, Vector(4));
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) diffs[i][j] = v.gradients[i][j] - v.gradients_prev[i][j];
      const auto expect = exact_expectation(spec, diffs);
      Vector mean(4);
      average_into(expect, mean);
      Vector truth(4);
      average_into(diffs, truth);
      for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(mean[j], truth[j], 1e-12);
      ++checked;
    });
    EXPECT_EQ(checked, 20);
  }
}

TEST(Marina, VarianceRecursionOnAverage) {
  const auto task = tiny_family(3, 4, 21);
  std::vector<Eigen::MatrixXd> a = task.matrices();
  const auto c = quadratic_constants(a);
  for (const auto& spec : {CompressorSpec::permk_big_d(), CompressorSpec::randk(1)}) {
    const auto ab = ab_constants(spec, 3, 4);
    const double lhat2 = marina_variance_term(c, ab);
    const double p = 0.3;
    const double gamma = marina_stepsize(c, ab, p, Objective::kNonconvex);
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      run_marina(task, marina(spec, gamma, p, 4, seed), [&](const RoundView& v) {
        Vector f_new(4), f_old(4);
        average_into(v.gradients, f_new);
        average_into(v.gradients_prev, f_old);
        const double lhs = dist_sq(v.g, f_new);
        const double rhs = (1 - p) * (lhat2 * dist_sq(v.x, v.x_prev) + dist_sq(v.g_prev, f_old));
        sum += lhs - rhs;
        sum_sq += (lhs - rhs) * (lhs - rhs);
        ++count;
      });
    }
    const double m = sum / static_cast<double>(count);
    const double se = std::sqrt((sum_sq / static_cast<double>(count) - m * m) / static_cast<double>(count - 1));
    EXPECT_LE(m, 3 * se) << label(spec);
  }
}

TEST(Marina, DivergenceIsRecorded) {
  const auto task = generate_quadratic({4, 20, 1e-2, 0.2, 1});
  const auto tr = run_marina(task, marina(CompressorSpec::permk_big_d(), 1e3, 0.5, 500, 1));
  EXPECT_TRUE(tr.diverged);
  ASSERT_TRUE(tr.diverged_round.has_value());
  EXPECT_EQ(tr.records.size(), *tr.diverged_round);
  EXPECT_FALSE(tr.diagnostic.empty());
}

TEST(Marina, RejectsBadConfig) {
  const auto task = generate_quadratic({4, 20, 1e-2, 0.2, 1});
  EXPECT_THROW(run_marina(task, marina(CompressorSpec::permk_big_d(), 0.1, 0.0, 5, 1)), InvalidArgument);
  EXPECT_THROW(run_marina(task, marina(CompressorSpec::randk(21), 0.1, 0.5, 5, 1)), InvalidArgument);
  EXPECT_THROW(run_marina(task, marina(CompressorSpec::permk_big_d(), -1.0, 0.5, 5, 1)), InvalidArgument);
}

TEST(Marina, OutputPointIsUniform) {
  const auto task = generate_quadratic({2, 4, 1e-1, 0.2, 1});
  std::vector<int> hits(5, 0);
  for (std::uint64_t seed = 0; seed < 5000; ++seed) {
    const auto tr = run_gd(task, RunConfig{Method::kGD, {}, 0.1, 1, 5, seed});
    ++hits[tr.x_hat_round];
    EXPECT_EQ(tr.x_hat.size(), 4U);
  }
  for (int h : hits) EXPECT_NEAR(h / 5000.0, 0.2, 0.025);
}

RunConfig ef21(std::size_t k, double gamma, std::size_t T) {
  RunConfig cfg;
  cfg.method = Method::kEF21;
  cfg.compressor = CompressorSpec::topk(k);
  cfg.gamma = gamma;
  cfg.T = T;
  return cfg;
}

TEST(Ef21, FullTopKIsGd) {
  const auto task = generate_quadratic({10, 100, 1e-6, 0.2, 3});
  const double gamma = 1.0 / quadratic_task_constants(task).l_minus;
  const auto gd = run_gd(task, gamma, 100);
  const auto e = run_ef21(task, ef21(100, gamma, 100), [&](const RoundView& v) {
    for (std::size_t i = 0; i < v.estimators.size(); ++i) EXPECT_EQ(v.estimators[i], v.gradients[i]);
  });
  EXPECT_EQ(e.x_final, gd.x_final);
  for (std::size_t t = 0; t < gd.records.size(); ++t) EXPECT_EQ(e.records[t].grad_norm_sq, gd.records[t].grad_norm_sq);
}

TEST(Ef21, MemoryRecursionHolds) {
  const auto task = generate_quadratic({10, 100, 1e-6, 0.0, 3});
  const auto c = quadratic_task_constants(task);
  for (std::size_t k : {1U, 10U, 50U}) {
    const auto prm = ef21_params(k / 100.0, c, Objective::kNonconvex);
    int rounds = 0;
    const auto tr = run_ef21(task, ef21(k, prm.gamma, 300), [&](const RoundView& v) {
      double g_old = 0.0, g_new = 0.0;
      for (std::size_t i = 0; i < v.estimators.size(); ++i) {
        g_old += dist_sq(v.estimators_prev[i], v.gradients_prev[i]);
        g_new += dist_sq(v.estimators[i], v.gradients[i]);
      }
      g_old /= 10.0;
      g_new /= 10.0;
      const double bound = (1 - prm.theta) * g_old + prm.beta * c.l_plus * c.l_plus * dist_sq(v.x, v.x_prev);
      EXPECT_LE(g_new, bound * (1 + 1e-12) + 1e-300);
      ++rounds;
    });
    EXPECT_EQ(rounds, 300);
    for (std::size_t t = 1; t < tr.records.size(); ++t)
      EXPECT_EQ(tr.records[t].cum_floats_per_node - tr.records[t - 1].cum_floats_per_node, static_cast<double>(k));
  }
}

TEST(Ef21, SingleNodeBound) {
  const auto task = generate_quadratic({1, 50, 1e-3, 0.0, 4});
  const auto sol = f_star_quadratic(task);
  const auto c = quadratic_task_constants(task);
  const std::size_t T = 400;
  const auto prm = ef21_params(5 / 50.0, c, Objective::kNonconvex);
  auto cfg = ef21(5, prm.gamma, T);
  cfg.f_star = sol.f_star;
  const auto tr = run_ef21(task, cfg);
  const auto rep = theory_check(tr, c, prm.gamma, T, Objective::kNonconvex);
  EXPECT_TRUE(rep.pass) << rep.lhs << " > " << rep.rhs;
}

TEST(Ef21, IndexBitsAreMetered) {
  const auto task = generate_quadratic({2, 100, 1e-2, 0.1, 4});
  auto cfg = ef21(3, 0.1, 5);
  cfg.metering.count_index_bits = true;
  const auto tr = run_ef21(task, cfg);
  EXPECT_EQ(tr.records[5].cum_bits_per_node, 5 * 3 * (32.0 + 7.0));
  EXPECT_THROW(run_ef21(task, marina(CompressorSpec::randk(3), 0.1, 0.5, 5, 1)), InvalidArgument);
}

TEST(TheoryCheck, NonconvexScalesWithHorizon) {
  const auto task = with_f_star(generate_quadratic({10, 100, 1e-6, 0.2, 1}));
  const auto c = quadratic_task_constants(task);
  const double gamma = marina_stepsize(c, ab_constants(CompressorSpec::permk_big_d(), 10, 100), 0.1, Objective::kNonconvex);
  const auto tr = run_marina(task, marina(CompressorSpec::permk_big_d(), gamma, 0.1, 400, 1));
  const auto r400 = theory_check(tr, c, gamma, 400, Objective::kNonconvex);
  EXPECT_TRUE(r400.pass);
  RunTrace half = tr;
  half.records.resize(201);
  const auto r200 = theory_check(half, c, gamma, 200, Objective::kNonconvex);
  EXPECT_DOUBLE_EQ(r200.rhs, 2 * r400.rhs);
  EXPECT_THROW(theory_check(tr, c, gamma, 100, Objective::kNonconvex), InvalidArgument);
}

TEST(TheoryCheck, PlRate) {
  const auto task = with_f_star(generate_quadratic({10, 100, 1e-2, 0.2, 1}));
  const auto c = quadratic_task_constants(task);
  const auto ab = ab_constants(CompressorSpec::permk_big_d(), 10, 100);
  const double gamma = marina_stepsize(c, ab, 0.1, Objective::kPL);
  const auto tr = run_marina(task, marina(CompressorSpec::permk_big_d(), gamma, 0.1, 500, 2));
  const auto r = theory_check(tr, c, gamma, 500, Objective::kPL);
  EXPECT_TRUE(r.pass) << r.worst_round << ": " << r.lhs << " > " << r.rhs;
  RunTrace no_fstar = run_marina(generate_quadratic({10, 100, 1e-2, 0.2, 1}),
                                 marina(CompressorSpec::permk_big_d(), gamma, 0.1, 10, 2));
  EXPECT_THROW(theory_check(no_fstar, c, gamma, 10, Objective::kPL), InvalidArgument);
}

}  // namespace
}  // namespace cclab
