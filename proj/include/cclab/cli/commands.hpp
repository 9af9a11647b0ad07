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

// The generate, constants, run and compare subcommands as library calls.

#ifndef CCLAB_CLI_COMMANDS_HPP
#define CCLAB_CLI_COMMANDS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cclab/analysis/complexity.hpp"
#include "cclab/analysis/constants.hpp"
#include "cclab/analysis/stepsize.hpp"
#include "cclab/cli/config.hpp"
#include "cclab/cli/csv.hpp"
#include "cclab/compressors/compressors.hpp"
#include "cclab/core/parallel.hpp"
#include "cclab/engine/engine.hpp"
#include "cclab/problems/autoencoder.hpp"
#include "cclab/problems/quadratic.hpp"
#include "cclab/problems/serialize.hpp"

namespace cclab {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitConfig = 2, kExitDiverged = 3, kExitIo = 4 };

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

using AnyTask = std::variant<QuadraticTask, AutoencoderTask>;

struct TaskInstance {
  AnyTask task;
  std::string fingerprint;  // hash of the canonical task description
  SmoothnessConstants constants;
  std::optional<double> f_star;
  double f0 = 0.0;          // f(x^0)
  Json description;         // autoencoder parameters; empty for quadratics

  std::size_t n() const { return std::visit([](const auto& t) { return t.workers(); }, task); }
  std::size_t d() const { return std::visit([](const auto& t) { return t.dim(); }, task); }
  bool is_quadratic() const { return std::holds_alternative<QuadraticTask>(task); }
  /// Delta0 = f(x^0) - f*, or f(x^0) when f* is unknown (the objectives are nonnegative).
  double delta0() const { return f_star ? f0 - *f_star : f0; }
};

namespace detail {

inline TaskInstance instance_from_quadratic(QuadraticTask task) {
  if (!task.known_f_star()) task = with_f_star(std::move(task));
  TaskInstance inst{std::move(task), {}, {}, {}, 0.0, {}};
  const auto& q = std::get<QuadraticTask>(inst.task);
  inst.fingerprint = hex16(fnv1a(dump_quadratic(q)));
  inst.constants = quadratic_task_constants(q);
  inst.f_star = q.known_f_star();
  inst.f0 = full_value(q, q.initial_point());
  return inst;
}

inline TaskInstance instance_from_autoencoder(const AutoencoderParams& p, Json description) {
  TaskInstance inst{make_autoencoder(p), {}, {}, {}, 0.0, std::move(description)};
  const auto& a = std::get<AutoencoderTask>(inst.task);
  inst.fingerprint = hex16(fnv1a(inst.description.dump()));
  inst.constants = estimate_local_constants(a, a.initial_point());
  inst.f0 = full_value(a, a.initial_point());
  return inst;
}

}  // namespace detail

inline TaskInstance build_task(const TaskSection& t) {
  switch (t.kind) {
    case TaskKind::kQuadratic: return detail::instance_from_quadratic(generate_quadratic(t.quadratic));
    case TaskKind::kAutoencoder: return detail::instance_from_autoencoder(t.autoencoder, t.canonical);
    case TaskKind::kFile: {
      const std::string text = read_text_file(t.file);
      if (text.rfind("cclab-task", 0) == 0) return detail::instance_from_quadratic(parse_quadratic(text));
      const TaskSection inner = parse_task(parse_json_text(text), std::filesystem::path(t.file).parent_path());
      if (inner.kind == TaskKind::kFile) throw ConfigError("task.file", "task files may not refer to other files");
      return build_task(inner);
    }
  }
  throw ConfigError("task", "unknown task kind");
}

/// Flat key=value lines: constants and predicted communication complexities
/// at the optimal parameters for each method/compressor pair.
inline std::string constants_report(const TaskInstance& inst, Objective objective, double eps) {
  std::ostringstream out;
  const auto& c = inst.constants;
  out << "fingerprint=" << inst.fingerprint << "\n";
  out << "n=" << inst.n() << "\n";
  out << "d=" << inst.d() << "\n";
  out << "L_minus=" << format_real(c.l_minus) << "\n";
  out << "L_plus=" << format_real(c.l_plus) << "\n";
  out << "L_pm=" << format_real(c.l_pm) << "\n";
  out << "mu=" << (c.mu ? format_real(*c.mu) : "none") << "\n";
  out << "constants_exact=" << (c.exact ? 1 : 0) << "\n";
  out << "f_star=" << (inst.f_star ? format_real(*inst.f_star) : "unknown") << "\n";
  out << "delta0=" << format_real(inst.delta0()) << "\n";
  out << "objective=" << to_string(objective) << "\n";
  out << "eps=" << format_real(eps) << "\n";
  ComplexityQuery q{regime_for(inst.d(), inst.n()), objective, c, inst.d(), inst.n(), inst.delta0(), eps};
  out << "regime=" << to_string(q.regime) << "\n";
  for (auto kind : {MethodKind::kMarinaPermK, MethodKind::kMarinaRandK, MethodKind::kEF21TopK}) {
    const std::string key = to_string(kind);
    try {
      const auto r = optimal_params(q, kind);
      out << key << ".p=" << format_real(r.params.p) << "\n";
      out << key << ".k=" << r.params.k << "\n";
      out << key << ".complexity=" << format_real(r.value) << "\n";
      out << key << ".approximate=" << (r.approximate ? 1 : 0) << "\n";
    } catch (const std::exception& e) {
      out << key << ".complexity=unavailable (" << e.what() << ")\n";
    }
  }
  return out.str();
}

inline std::filesystem::path ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  return dir;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

struct GenerateResult {
  std::filesystem::path task_file;
  std::filesystem::path report_file;
  std::string report;
};

/// Writes the task artifact and its constants report into the output directory.
inline GenerateResult cmd_generate(const ExperimentConfig& cfg) {
  const TaskInstance inst = build_task(cfg.task);
  const auto dir = ensure_directory(cfg.output.directory);
  GenerateResult r;
  r.report = constants_report(inst, cfg.run.objective, cfg.report.eps);
  if (inst.is_quadratic()) {
    r.task_file = dir / "task.txt";
    write_text_file(r.task_file, dump_quadratic(std::get<QuadraticTask>(inst.task)));
  } else {
    r.task_file = dir / "task.json";
    write_text_file(r.task_file, inst.description.dump(2) + "\n");
  }
  r.report_file = dir / "constants.txt";
  write_text_file(r.report_file, r.report);
  return r;
}

inline std::string cmd_constants(const ExperimentConfig& cfg) {
  return constants_report(build_task(cfg.task), cfg.run.objective, cfg.report.eps);
}

/// Stepsize prescribed by theory for the method, compressor and objective.
inline double theory_gamma(Method method, const CompressorSpec& spec, double p, const TaskInstance& inst,
                           Objective objective) {
  const auto& c = inst.constants;
  switch (method) {
    case Method::kMarina: return marina_stepsize(c, ab_constants(spec, inst.n(), inst.d()), p, objective);
    case Method::kEF21: return ef21_params(contraction_alpha(spec, inst.d()), c, objective).gamma;
    case Method::kGD:
      CCLAB_REQUIRE(c.l_minus > 0.0, "theory_gamma: L- is zero");
      return 1.0 / c.l_minus;
  }
  throw InvalidArgument("theory_gamma: unknown method");
}

struct RunCell {
  std::size_t method_index = 0;
  std::string gamma_label;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  std::string run_id;
  RunConfig config;
};

struct RunRow {
  RunCell cell;
  bool diverged = false;
  std::optional<std::uint64_t> diverged_round;
  double final_grad_norm_sq = 0.0;
  std::optional<double> final_f_gap;
  double final_bits = 0.0;
  bool best = false;
};

struct RunOutcome {
  std::vector<RunRow> rows;
  std::vector<LabelledTrace> traces;  // filled when requested
  std::string summary_csv;
  int exit_code = kExitOk;
};

inline std::string gamma_label(const GammaSpec& g, double multiplier) {
  return g.theory ? "theory_x" + format_real(multiplier) : "g" + format_real(g.value);
}

/// Expands (method, multiplier, seed) cells for a task.
inline std::vector<RunCell> expand_cells(const ExperimentConfig& cfg, const TaskInstance& inst) {
  if (cfg.methods.empty()) throw ConfigError("methods", "missing required field");
  std::vector<RunCell> cells;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const auto& m = cfg.methods[mi];
    const CompressorSpec spec = resolve_compressor(m, inst.n(), inst.d());
    const double p = resolve_p(m, spec, inst.n(), inst.d());
    std::vector<std::pair<std::string, double>> gammas;
    if (m.gamma.theory) {
      double base = 0.0;
      try {
        base = theory_gamma(m.method, spec, p, inst, cfg.run.objective);
      } catch (const std::exception& e) {
        throw ConfigError("methods[" + std::to_string(mi) + "].gamma", e.what());
      }
      for (double mult : m.gamma.multipliers) gammas.emplace_back(gamma_label(m.gamma, mult), base * mult);
    } else {
      gammas.emplace_back(gamma_label(m.gamma, 1.0), m.gamma.value);
    }
    for (const auto& [label, gamma] : gammas) {
      for (std::uint64_t seed : cfg.run.seeds) {
        RunCell c;
        c.method_index = mi;
        c.gamma_label = label;
        c.gamma = gamma;
        c.seed = seed;
        c.run_id = inst.fingerprint + "-" + m.name + "-" + label + "-s" + std::to_string(seed);
        c.config.method = m.method;
        c.config.compressor = spec;
        c.config.gamma = gamma;
        c.config.p = p;
        c.config.T = cfg.run.T;
        c.config.master_seed = seed;
        c.config.metering = cfg.run.metering;
        c.config.threads = cfg.run.threads;
        cells.push_back(std::move(c));
      }
    }
  }
  return cells;
}

inline constexpr std::string_view kSummaryHeader =
    "run_id,method,compressor,gamma_label,gamma,p,seed,T,diverged,diverged_round,final_grad_norm_sq,final_f_gap,"
    "final_cum_bits_per_node,best";

/// Runs every cell, writes one trace CSV per run plus summary.csv, and marks
/// the best multiplier per method: smallest mean final grad_norm_sq over
/// seeds (final f_gap for PL), among multipliers where no seed diverged.
inline RunOutcome cmd_run(const ExperimentConfig& cfg, bool keep_traces = false) {
  const TaskInstance inst = build_task(cfg.task);
  if (cfg.run.objective == Objective::kPL && !inst.f_star)
    throw ConfigError("run.objective", "pl needs a task with known f*");
  const auto cells = expand_cells(cfg, inst);
  std::filesystem::path dir;
  if (cfg.output.csv) dir = ensure_directory(cfg.output.directory);

  RunOutcome out;
  out.rows.resize(cells.size());
  if (keep_traces) out.traces.resize(cells.size());
  std::vector<std::string> io_errors(cells.size());
  parallel_for(cells.size(), cfg.run.jobs, [&](std::size_t i) {
    const RunTrace tr = std::visit([&](const auto& task) { return run(task, cells[i].config); }, inst.task);
    RunRow& row = out.rows[i];
    row.cell = cells[i];
    row.diverged = tr.diverged;
    row.diverged_round = tr.diverged_round;
    if (tr.records.empty()) {
      row.final_grad_norm_sq = NAN;
    } else {
      row.final_grad_norm_sq = tr.last().grad_norm_sq;
      row.final_f_gap = tr.last().f_gap;
      row.final_bits = tr.last().cum_bits_per_node;
    }
    if (cfg.output.csv) {
      try {
        write_text_file(dir / (cells[i].run_id + ".csv"), trace_csv(cells[i].run_id, tr));
      } catch (const IoError& e) {
        io_errors[i] = e.what();
      }
    }
    if (keep_traces) out.traces[i] = {cells[i].run_id, tr};
  });
  for (const auto& e : io_errors)
    if (!e.empty()) throw IoError(e);

  const bool pl = cfg.run.objective == Objective::kPL;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    std::map<std::string, std::pair<double, std::size_t>> score;  // label -> (sum, count)
    std::map<std::string, bool> bad;
    for (const auto& r : out.rows) {
      if (r.cell.method_index != mi) continue;
      const double metric = pl && r.final_f_gap ? *r.final_f_gap : r.final_grad_norm_sq;
      if (r.diverged) bad[r.cell.gamma_label] = true;
      auto& s = score[r.cell.gamma_label];
      s.first += metric;
      ++s.second;
    }
    std::optional<std::string> best;
    double best_value = 0.0;
    for (const auto& [label, s] : score) {
      if (bad[label]) continue;
      const double mean = s.first / static_cast<double>(s.second);
      if (!best || mean < best_value) {
        best = label;
        best_value = mean;
      }
    }
    if (!best) out.exit_code = kExitDiverged;
    for (auto& r : out.rows)
      if (r.cell.method_index == mi && best && r.cell.gamma_label == *best) r.best = true;
  }

  std::ostringstream s;
  s << kSummaryHeader << "\n";
  for (const auto& r : out.rows) {
    s << r.cell.run_id << "," << to_string(r.cell.config.method) << "," << label(r.cell.config.compressor) << ","
      << r.cell.gamma_label << "," << format_real(r.cell.gamma) << "," << format_real(r.cell.config.p) << ","
      << r.cell.seed << "," << r.cell.config.T << "," << (r.diverged ? 1 : 0) << ","
      << (r.diverged_round ? std::to_string(*r.diverged_round) : "") << "," << format_real(r.final_grad_norm_sq)
      << "," << (r.final_f_gap ? format_real(*r.final_f_gap) : "") << "," << format_real(r.final_bits) << ","
      << (r.best ? 1 : 0) << "\n";
  }
  out.summary_csv = s.str();
  if (cfg.output.csv) write_text_file(dir / "summary.csv", out.summary_csv);
  return out;
}

// -----------------------------------------------------------------------------
// compare

/// Task fingerprint embedded at the start of a run id.
inline std::string fingerprint_of(const std::string& run_id) {
  const auto dash = run_id.find('-');
  if (dash == std::string::npos || dash == 0) throw FormatError("run id without a task fingerprint: " + run_id);
  return run_id.substr(0, dash);
}

struct BudgetPoint {
  double grad_norm_sq = 0.0;
  double bits = 0.0;
  std::uint64_t round = 0;
};

/// Smallest grad_norm_sq among records whose cumulative bits fit the budget.
inline std::optional<BudgetPoint> best_under_budget(const RunTrace& trace, double budget) {
  std::optional<BudgetPoint> best;
  for (const auto& r : trace.records) {
    if (r.cum_bits_per_node > budget) break;
    if (!best || r.grad_norm_sq < best->grad_norm_sq) best = BudgetPoint{r.grad_norm_sq, r.cum_bits_per_node, r.round};
  }
  return best;
}

struct CompareRow {
  std::string run_id;
  std::optional<BudgetPoint> best;
  std::size_t rank = 0;  // 1-based; equal values share a rank
};

inline std::vector<CompareRow> cmd_compare(const std::vector<LabelledTrace>& traces, double budget) {
  if (traces.empty()) throw ConfigError("compare", "no trace files");
  const std::string fp = fingerprint_of(traces.front().run_id);
  for (const auto& t : traces)
    if (fingerprint_of(t.run_id) != fp)
      throw ConfigError("compare", "traces come from different tasks: " + traces.front().run_id + " vs " + t.run_id);
  std::vector<CompareRow> rows;
  for (const auto& t : traces) rows.push_back({t.run_id, best_under_budget(t.trace, budget), 0});
  auto key = [](const CompareRow& r) { return r.best ? r.best->grad_norm_sq : INFINITY; };
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  for (std::size_t i = 0; i < rows.size(); ++i)
    rows[i].rank = i > 0 && key(rows[i]) == key(rows[i - 1]) ? rows[i - 1].rank : i + 1;
  return rows;
}

inline std::string ranking_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream s;
  s << "rank,run_id,best_grad_norm_sq,cum_bits_per_node,round\n";
  for (const auto& r : rows) {
    s << r.rank << "," << r.run_id << ",";
    if (r.best) s << format_real(r.best->grad_norm_sq) << "," << format_real(r.best->bits) << "," << r.best->round;
    else s << ",,";
    s << "\n";
  }
  return s.str();
}

/// Two columns: cumulative bits per node, grad_norm_sq.
inline std::string gnuplot_series(const RunTrace& trace) {
  std::ostringstream s;
  s << "# cum_bits_per_node grad_norm_sq\n";
  for (const auto& r : trace.records) s << format_real(r.cum_bits_per_node) << " " << format_real(r.grad_norm_sq) << "\n";
  return s.str();
}

}  // namespace cclab

#endif  // CCLAB_CLI_COMMANDS_HPP
