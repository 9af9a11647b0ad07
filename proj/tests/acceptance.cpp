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

// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cclab/analysis/complexity.hpp"
#include "cclab/analysis/constants.hpp"
#include "cclab/analysis/stepsize.hpp"
#include "cclab/cli/commands.hpp"
#include "cclab/compressors/ab_check.hpp"
#include "cclab/engine/engine.hpp"
#include "cclab/engine/theory_check.hpp"
#include "cclab/problems/autoencoder.hpp"
#include "cclab/problems/dense_quadratic.hpp"
#include "cclab/problems/quadratic.hpp"

namespace cclab {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<Vector> random_inputs(std::size_t n, std::size_t d, KeyedStream& s) {
  std::vector<Vector> a(n, Vector(d));
  for (auto& v : a)
    for (double& x : v) x = s.normal();
  return a;
}

double variance_of_inputs(const std::vector<Vector>& a) {
  double m = 0.0;
  for (const auto& v : a) m += norm_sq(v);
  return m / static_cast<double>(a.size()) - norm_sq(mean_of(a));
}

Outcome exhaustive_permk() {
  KeyedStream s(101);
  double worst = 0.0;
  for (auto [d, n] : {std::pair<std::size_t, std::size_t>{2, 2}, {4, 2}, {6, 3}}) {
    const auto ab = ab_constants(CompressorSpec::permk_big_d(), n, d);
    if (ab.A != 1.0 || ab.B != 1.0) return {false, "A, B differ from 1"};
    for (int rep = 0; rep < 100; ++rep) {
      const auto a = random_inputs(n, d, s);
      const auto gap = empirical_ab_gap_exhaustive(CompressorSpec::permk_big_d(), a);
      worst = std::max(worst, std::fabs(gap.lhs - variance_of_inputs(a)));
      worst = std::max(worst, std::fabs(gap.lhs - gap.rhs));
    }
  }
  return {worst <= 1e-10, "max |E err - IV(1) rhs| = " + fmt(worst)};
}

Outcome permk_big_n_constant() {
  const auto ab = ab_constants(CompressorSpec::permk_big_n(), 4, 2);
  const double third = 1.0 / 3.0;
  bool ok = std::fabs(ab.A - third) <= 1e-15 && std::fabs(ab.B - third) <= 1e-15;
  KeyedStream s(202);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto a = random_inputs(4, 2, s);
    const auto gap = empirical_ab_gap_exhaustive(CompressorSpec::permk_big_n(), a);
    if (gap.outcomes != 24) ok = false;
    worst = std::max(worst, std::fabs(gap.lhs - third * variance_of_inputs(a)));
  }
  return {ok && worst <= 1e-10, "A = " + fmt(ab.A) + ", B = " + fmt(ab.B) + ", max equality error " + fmt(worst)};
}

Outcome randk_omega() {
  std::ostringstream det;
  bool ok = true;
  KeyedStream xs(303);
  Vector x(10);
  for (double& v : x) v = xs.normal();
  for (std::size_t k : {1U, 2U, 5U}) {
    const auto spec = CompressorSpec::randk(k);
    double sum = 0.0;
    const std::size_t draws = 100000;
    for (std::size_t t = 0; t < draws; ++t) {
      const auto m = compress(spec, x, RoundContext{77, t, 0, 1, 10});
      sum += dist_sq(m.to_dense(), x) / norm_sq(x);
    }
    const double est = sum / draws;
    const double omega = 10.0 / static_cast<double>(k) - 1.0;
    const double rel = std::fabs(est - omega) / omega;
    ok = ok && rel <= 0.03;
    det << "k=" << k << ": " << fmt(est) << " vs " << fmt(omega) << "; ";
  }
  return {ok, det.str()};
}

Outcome hessian_variance() {
  KeyedStream s(404);
  double worst_chain = 0.0;
  double worst_gap = 0.0;
  bool ok = true;
  for (int fam = 0; fam < 50; ++fam) {
    const std::size_t n = 1 + s.below(5);
    const std::size_t d = 1 + s.below(8);
    std::vector<Eigen::MatrixXd> a;
    for (std::size_t i = 0; i < n; ++i) a.push_back(random_symmetric(d, s));
    const DenseQuadratic task(a);
    const auto c = quadratic_constants(a);
    if (!c.satisfies_chain(1e-9)) ok = false;
    const double lpm2 = c.l_pm * c.l_pm;
    HessianVarianceSampling cfg;
    cfg.samples = 1000;
    cfg.seed = static_cast<std::uint64_t>(fam);
    const double plain = empirical_hessian_variance(task, task.initial_point(), cfg);
    if (plain > lpm2 * (1 + 1e-9) + 1e-12) ok = false;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Eigen::MatrixXd mean_sq = mean;
    for (const auto& m : a) {
      mean += m / static_cast<double>(n);
      mean_sq += m * m / static_cast<double>(n);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mean_sq - mean * mean);
    const Eigen::VectorXd top = es.eigenvectors().col(static_cast<Eigen::Index>(d) - 1);
    cfg.extra_directions = {Vector(top.data(), top.data() + d)};
    const double with_top = empirical_hessian_variance(task, task.initial_point(), cfg);
    if (with_top > lpm2 * (1 + 1e-9) + 1e-12) ok = false;
    const double gap = lpm2 > 1e-12 ? (lpm2 - with_top) / lpm2 : std::fabs(with_top);
    worst_gap = std::max(worst_gap, gap);
    const double lm2 = c.l_minus * c.l_minus, lp2 = c.l_plus * c.l_plus;
    worst_chain = std::max({worst_chain, lp2 - lm2 - lpm2, lpm2 - lp2, c.l_minus - c.l_plus});
  }
  ok = ok && worst_gap <= 0.05;
  return {ok, "max relative gap with top eigenvector " + fmt(worst_gap) + ", worst chain slack " + fmt(worst_chain)};
}

Outcome marina_is_gd() {
  const auto task = generate_quadratic({10, 100, 1e-6, 0.2, 5});
  const auto c = quadratic_task_constants(task);
  RunConfig m;
  m.compressor = CompressorSpec::permk_big_d();
  m.gamma = 1.0 / c.l_minus;
  m.p = 1.0;
  m.T = 100;
  m.master_seed = 3;
  RunConfig g = m;
  g.method = Method::kGD;
  std::vector<Vector> xm, xg;
  run_marina(task, m, [&](const RoundView& v) { xm.emplace_back(v.x.begin(), v.x.end()); });
  run_gd(task, g, [&](const RoundView& v) { xg.emplace_back(v.x.begin(), v.x.end()); });
  if (xm.size() != 100 || xg.size() != 100) return {false, "missing rounds"};
  double worst = 0.0;
  for (std::size_t t = 0; t < 100; ++t)
    for (std::size_t j = 0; j < 100; ++j) worst = std::max(worst, std::fabs(xm[t][j] - xg[t][j]));
  return {worst <= 1e-15, "max coordinate difference " + fmt(worst)};
}

Outcome nonconvex_rate() {
  std::ostringstream det;
  bool ok = true;
  for (double s : {0.0, 0.2}) {
    const auto task = with_f_star(generate_quadratic({10, 100, 1e-6, s, 0}));
    const auto c = quadratic_task_constants(task);
    const auto spec = CompressorSpec::permk_big_d();
    const double p = 0.1;
    const double gamma = marina_stepsize(c, ab_constants(spec, 10, 100), p, Objective::kNonconvex);
    const std::size_t T = 2000;
    std::vector<RunTrace> traces;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      RunConfig cfg;
      cfg.compressor = spec;
      cfg.gamma = gamma;
      cfg.p = p;
      cfg.T = T;
      cfg.master_seed = seed;
      traces.push_back(run_marina(task, cfg));
    }
    const double delta0 = *traces.front().records.front().f_gap;
    const auto rep = averaged_nonconvex_check(traces, gamma, T, delta0);
    ok = ok && rep.pass;
    det << "s=" << s << ": " << fmt(rep.lhs) << " <= " << fmt(rep.rhs) << "; ";
  }
  return {ok, det.str()};
}

Outcome pl_rate() {
  std::ostringstream det;
  bool ok = true;
  for (double s : {0.0, 0.2}) {
    const auto task = with_f_star(generate_quadratic({10, 100, 1e-4, s, 0}));
    const auto c = quadratic_task_constants(task);
    const auto spec = CompressorSpec::permk_big_d();
    const double p = 0.1;
    RunConfig cfg;
    cfg.compressor = spec;
    cfg.gamma = marina_stepsize(c, ab_constants(spec, 10, 100), p, Objective::kPL);
    cfg.p = p;
    cfg.T = 2000;
    cfg.master_seed = 1;
    const auto tr = run_marina(task, cfg);
    const auto rep = theory_check(tr, c, cfg.gamma, cfg.T, Objective::kPL);
    ok = ok && rep.pass;
    det << "s=" << s << ": mu=" << fmt(*c.mu) << ", tightest round " << rep.worst_round << " " << fmt(rep.lhs)
        << " <= " << fmt(rep.rhs) << "; ";
  }
  return {ok, det.str()};
}

Outcome metering() {
  const auto task = generate_quadratic({10, 100, 1e-6, 0.2, 0});
  RunConfig cfg;
  cfg.compressor = CompressorSpec::permk_big_d();
  cfg.gamma = 0.1;
  cfg.p = 0.1;
  cfg.T = 10000;
  cfg.master_seed = 8;
  const auto tr = run_marina(task, cfg);
  if (tr.records.size() != 10001) return {false, "run incomplete"};
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 1; t < tr.records.size(); ++t) {
    const double f = tr.records[t].cum_floats_per_node - tr.records[t - 1].cum_floats_per_node;
    sum += f;
    sum_sq += f * f;
  }
  const double m = sum / 10000.0;
  const double se = std::sqrt((sum_sq / 10000.0 - m * m) / 9999.0);
  return {std::fabs(m - 19.0) <= 3 * se, "mean " + fmt(m) + " floats/round/node, standard error " + fmt(se)};
}

Outcome figure_one_ordering() {
  const std::size_t n = 1000, d = 1000;
  const auto task = with_f_star(generate_quadratic({n, d, 1e-6, 0.0, 0}));
  const auto c = quadratic_task_constants(task);
  const double delta0 = full_value(task, task.initial_point()) - *task.known_f_star();
  const ComplexityQuery q{Regime::kDGeN, Objective::kNonconvex, c, d, n, delta0, 1e-3};
  const auto perm_opt = optimal_params(q, MethodKind::kMarinaPermK);
  const auto rand_opt = optimal_params(q, MethodKind::kMarinaRandK);
  auto make = [&](CompressorSpec spec, double p) {
    RunConfig cfg;
    cfg.compressor = std::move(spec);
    cfg.p = p;
    cfg.gamma = marina_stepsize(c, ab_constants(cfg.compressor, n, d), p, Objective::kNonconvex);
    cfg.T = 2000;
    cfg.master_seed = 1;
    return cfg;
  };
  const auto perm = run_marina(task, make(CompressorSpec::permk(n, d), perm_opt.params.p));
  const auto rand = run_marina(task, make(CompressorSpec::randk(rand_opt.params.k), rand_opt.params.p));
  if (perm.diverged || rand.diverged) return {false, "a run diverged"};
  const double shared = std::min(perm.last().cum_bits_per_node, rand.last().cum_bits_per_node);
  std::set<double> budgets;
  for (const auto* tr : {&perm, &rand})
    for (const auto& r : tr->records)
      if (r.cum_bits_per_node > 0.0 && r.cum_bits_per_node <= shared) budgets.insert(r.cum_bits_per_node);
  std::size_t violations = 0;
  for (double b : budgets) {
    const auto x = best_under_budget(perm, b), y = best_under_budget(rand, b);
    if (!x || !y || x->grad_norm_sq > y->grad_norm_sq) ++violations;
  }
  const auto end_p = best_under_budget(perm, shared), end_r = best_under_budget(rand, shared);
  return {violations == 0 && !budgets.empty(),
          std::to_string(budgets.size()) + " budgets, " + std::to_string(violations) + " violations; at " + fmt(shared) +
              " bits PermK " + fmt(end_p->grad_norm_sq) + " vs RandK(k=" + std::to_string(rand_opt.params.k) + ") " +
              fmt(end_r->grad_norm_sq)};
}

Outcome ef21_properties() {
  std::ostringstream det;
  bool ok = true;
  KeyedStream s(1010);
  std::size_t bad = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t d = 1 + s.below(50);
    const std::size_t k = 1 + s.below(d);
    Vector x(d);
    for (double& v : x) v = s.normal();
    const auto m = topk(x, k);
    if (dist_sq(m.to_dense(), x) > (1.0 - static_cast<double>(k) / static_cast<double>(d)) * norm_sq(x)) ++bad;
  }
  ok = ok && bad == 0;
  det << "contraction violations " << bad << "; ";

  const auto task = generate_quadratic({10, 100, 1e-6, 0.2, 3});
  const auto c = quadratic_task_constants(task);
  RunConfig e;
  e.method = Method::kEF21;
  e.compressor = CompressorSpec::topk(100);
  e.gamma = 1.0 / c.l_minus;
  e.T = 100;
  RunConfig g = e;
  g.method = Method::kGD;
  const auto te = run_ef21(task, e), tg = run_gd(task, g);
  double worst = 0.0;
  for (std::size_t j = 0; j < 100; ++j) worst = std::max(worst, std::fabs(te.x_final[j] - tg.x_final[j]));
  for (std::size_t t = 0; t < tg.records.size(); ++t)
    worst = std::max(worst, std::fabs(te.records[t].grad_norm_sq - tg.records[t].grad_norm_sq));
  ok = ok && worst <= 1e-15;
  det << "k=d vs GD " << fmt(worst) << "; ";

  const auto flat = generate_quadratic({10, 100, 1e-6, 0.0, 3});
  const auto cf = quadratic_task_constants(flat);
  std::size_t rounds = 0, broken = 0;
  for (std::size_t k : {1U, 10U, 50U}) {
    const auto prm = ef21_params(static_cast<double>(k) / 100.0, cf, Objective::kNonconvex);
    RunConfig cfg = e;
    cfg.compressor = CompressorSpec::topk(k);
    cfg.gamma = prm.gamma;
    cfg.T = 500;
    run_ef21(flat, cfg, [&](const RoundView& v) {
      double g_old = 0.0, g_new = 0.0;
      for (std::size_t i = 0; i < v.estimators.size(); ++i) {
        g_old += dist_sq(v.estimators_prev[i], v.gradients_prev[i]);
        g_new += dist_sq(v.estimators[i], v.gradients[i]);
      }
      g_old /= 10.0;
      g_new /= 10.0;
      const double rhs = (1 - prm.theta) * g_old + prm.beta * cf.l_plus * cf.l_plus * dist_sq(v.x, v.x_prev);
      if (g_new > rhs) ++broken;
      ++rounds;
    });
  }
  ok = ok && broken == 0 && rounds == 1500;
  det << "recursion checked on " << rounds << " rounds, " << broken << " violations";
  return {ok, det.str()};
}

Outcome autoencoder_gradient() {
  double worst = 0.0;
  for (double lambda : {0.0, 1e-3}) {
    auto data = synthetic_mixture(10, 8, 3, 0.2, 11);
    auto split = split_heterogeneous(10, 1, 1.0, 11);
    if (split.shards[split.assignment[0]].size() != 5) return {false, "expected 5 datapoints"};
    const AutoencoderTask task(8, 3, lambda, data, split, xavier_initial_point(8, 3, 11));
    KeyedStream s(12);
    for (int point = 0; point < 3; ++point) {
      Vector x(task.dim());
      for (double& v : x) v = s.normal();
      Vector g(task.dim()), fd(task.dim());
      task.worker_gradient(0, x, g);
      const double h = 1e-6;
      Vector y = x;
      for (std::size_t j = 0; j < x.size(); ++j) {
        y[j] = x[j] + h;
        const double fp = task.worker_value(0, y);
        y[j] = x[j] - h;
        const double fm = task.worker_value(0, y);
        y[j] = x[j];
        fd[j] = (fp - fm) / (2 * h);
      }
      worst = std::max(worst, std::sqrt(dist_sq(fd, g) / norm_sq(g)));
    }
  }
  return {worst <= 1e-4, "max relative error " + fmt(worst)};
}

Outcome complexity_identities() {
  bool ok = true;
  double worst = 0.0;
  for (double s : {0.0, 0.2, 0.8}) {
    for (auto [n, d] : {std::pair<std::size_t, std::size_t>{10, 100}, {100, 10}}) {
      const auto task = with_f_star(generate_quadratic({n, d, 1e-3, s, 2}));
      const auto c = quadratic_task_constants(task);
      const double delta0 = full_value(task, task.initial_point()) - *task.known_f_star();
      const double eps = 1e-4;
      const ComplexityQuery q{regime_for(d, n), Objective::kNonconvex, c, d, n, delta0, eps};
      const double target = delta0 * static_cast<double>(d) * c.l_minus / eps;
      const double perm = comm_complexity(q, {MethodKind::kMarinaPermK, 1.0, 0}).value;
      const double topk = comm_complexity(q, {MethodKind::kEF21TopK, 1.0, d}).value;
      for (std::size_t k : {std::size_t{1}, d / 2, d}) {
        const double rk = comm_complexity(q, {MethodKind::kMarinaRandK, 1.0, k}).value;
        worst = std::max(worst, std::fabs(rk - target) / target);
      }
      worst = std::max({worst, std::fabs(perm - target) / target, std::fabs(topk - target) / target});
      if (optimal_params(q, MethodKind::kEF21TopK).params.k != d) ok = false;
    }
  }
  ok = ok && worst <= 1e-14;
  return {ok, "max relative deviation " + fmt(worst) + (ok ? ", EF21 optimum at k=d" : "")};
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> check;
};

}  // namespace
}  // namespace cclab

int main() {
  using namespace cclab;
  const std::vector<Criterion> criteria{
      {1, "PermK exhaustive AB identity (d >= n)", 1, exhaustive_permk},
      {2, "PermK n >= d constant A = B = 1/3", 1, permk_big_n_constant},
      {3, "RandK omega by Monte Carlo", 2, randk_omega},
      {4, "Hessian variance closed form and chain", 5, hessian_variance},
      {5, "MARINA with p = 1 equals GD", 1, marina_is_gd},
      {6, "MARINA + PermK nonconvex rate bound", 30, nonconvex_rate},
      {7, "MARINA + PermK PL linear rate", 30, pl_rate},
      {8, "communication metering p d + (1 - p) zeta", 10, metering},
      {9, "PermK beats RandK at every shared bit budget", 180, figure_one_ordering},
      {10, "EF21 contraction, identity case, recursion", 30, ef21_properties},
      {11, "autoencoder gradient vs finite differences", 2, autoencoder_gradient},
      {12, "communication complexity identities", 1, complexity_identities},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = out.pass && in_time;
    failures += !pass;
    std::printf("%s %2d %s (%.2f s%s): %s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                in_time ? "" : ", over time limit", out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
