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

// cclab: generate tasks, run methods, compare traces, print constants.

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cclab/cli/commands.hpp"

namespace {

struct ConfigFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  long long T = -1;
  std::string seeds;

  void attach(CLI::App* app, bool with_run_flags) {
    app->add_option("-c,--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "override a config field, e.g. --set task.noise_scale=0.2");
    app->add_option("-o,--out", out, "output directory (output.directory)");
    if (with_run_flags) {
      app->add_option("-T,--rounds", T, "number of rounds (run.T)");
      app->add_option("--seeds", seeds, "comma-separated seeds (run.seeds)");
    }
  }

  cclab::ExperimentConfig load() const {
    std::vector<std::string> all = overrides;
    if (!out.empty()) all.push_back("output.directory=\"" + out + "\"");
    if (T >= 0) all.push_back("run.T=" + std::to_string(T));
    if (!seeds.empty()) all.push_back("run.seeds=[" + seeds + "]");
    return cclab::load_config(config, all);
  }
};

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const cclab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cclab::kExitConfig;
  } catch (const cclab::FormatError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return cclab::kExitConfig;
  } catch (const cclab::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return cclab::kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cclab::kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cclab: compressed distributed optimization laboratory"};
  app.require_subcommand(1);

  ConfigFlags gen_flags, run_flags, const_flags;
  auto* gen = app.add_subcommand("generate", "write the task artifact and its constants report");
  gen_flags.attach(gen, false);
  auto* run = app.add_subcommand("run", "run every (method, stepsize, seed) cell and write trace CSVs");
  run_flags.attach(run, true);
  auto* constants = app.add_subcommand("constants", "print smoothness constants and complexity predictions");
  const_flags.attach(constants, false);

  std::vector<std::string> files;
  double budget = 0.0;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "rank traces by best grad_norm_sq within a bit budget");
  compare->add_option("files", files, "trace CSV files")->required()->check(CLI::ExistingFile);
  compare->add_option("-b,--budget", budget, "bits per node")->required();
  compare->add_option("-o,--out", compare_out, "directory for ranking.csv and gnuplot series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cclab::kExitOk : cclab::kExitConfig;
  }

  if (gen->parsed()) {
    return guarded([&] {
      const auto r = cclab::cmd_generate(gen_flags.load());
      std::cout << r.report << "task_file=" << r.task_file.string() << "\n";
      return cclab::kExitOk;
    });
  }
  if (constants->parsed()) {
    return guarded([&] {
      std::cout << cclab::cmd_constants(const_flags.load());
      return cclab::kExitOk;
    });
  }
  if (run->parsed()) {
    return guarded([&] {
      const auto outcome = cclab::cmd_run(run_flags.load());
      std::cout << outcome.summary_csv;
      for (const auto& r : outcome.rows)
        if (r.diverged) std::cerr << "diverged: " << r.cell.run_id << " at round " << *r.diverged_round << "\n";
      if (outcome.exit_code == cclab::kExitDiverged) std::cerr << "every stepsize of some method diverged\n";
      return outcome.exit_code;
    });
  }
  return guarded([&] {
    std::vector<cclab::LabelledTrace> traces;
    for (const auto& f : files) traces.push_back(cclab::load_trace_csv(f));
    const auto rows = cclab::cmd_compare(traces, budget);
    const std::string table = cclab::ranking_csv(rows);
    std::cout << table;
    if (!compare_out.empty()) {
      const auto dir = cclab::ensure_directory(compare_out);
      cclab::write_text_file(dir / "ranking.csv", table);
      for (const auto& t : traces) cclab::write_text_file(dir / (t.run_id + ".dat"), cclab::gnuplot_series(t.trace));
    }
    return cclab::kExitOk;
  });
}
