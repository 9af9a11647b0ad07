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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "cclab/cli/commands.hpp"

namespace cclab {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("cclab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Json quadratic_config(std::size_t n, std::size_t d, double s, const fs::path& out) {
  return Json::parse(R"({
    "task": {"kind": "quadratic", "n": )" + std::to_string(n) + R"(, "d": )" + std::to_string(d) +
                     R"(, "lambda": 1e-3, "noise_scale": )" + std::to_string(s) + R"(, "seed": 4},
    "methods": [{"method": "marina", "compressor": "permk", "gamma": "theory*{1,2,4}"}],
    "run": {"T": 40, "seeds": [0, 1]},
    "output": {"directory": ")" + out.string() + R"("}
  })");
}

TEST(Gamma, Grammar) {
  EXPECT_TRUE(parse_gamma("theory", "g").theory);
  EXPECT_EQ(parse_gamma("theory", "g").multipliers, std::vector<double>{1.0});
  for (const char* text : {"theory*{1,2,4}", "theory\xC3\x97{1, 2, 4}", "theoryx{1,2,4}", " theory * {1,2,4} "})
    EXPECT_EQ(parse_gamma(text, "g").multipliers, (std::vector<double>{1, 2, 4})) << text;
  EXPECT_EQ(parse_gamma("theory*0.5", "g").multipliers, std::vector<double>{0.5});
  const auto num = parse_gamma(0.25, "g");
  EXPECT_FALSE(num.theory);
  EXPECT_EQ(num.value, 0.25);
  for (const Json& bad : {Json("fast"), Json("theory*{}"), Json("theory*{1,-2}"), Json("theory+2"), Json(0.0), Json(-1.0),
                          Json("theory*{1,2")})
    EXPECT_THROW(parse_gamma(bad, "g"), ConfigError) << bad.dump();
}

TEST(Config, MissingFieldIsNamed) {
  Json j = quadratic_config(4, 8, 0.0, "/tmp");
  j["task"].erase("lambda");
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "task.lambda");
  }
}

TEST(Config, UnknownAndMistypedFields) {
  Json j = quadratic_config(4, 8, 0.0, "/tmp");
  j["run"]["rounds"] = 3;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = quadratic_config(4, 8, 0.0, "/tmp");
  j["task"]["n"] = "four";
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "task.n");
  }
  j = quadratic_config(4, 8, 0.0, "/tmp");
  j["methods"][0]["p"] = 1.5;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = quadratic_config(4, 8, 0.0, "/tmp");
  j["methods"][0]["method"] = "ef21";
  j["methods"][0]["compressor"] = "randk";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = quadratic_config(4, 8, 0.0, "/tmp");
  j["task"]["file"] = "/nonexistent/task.txt";
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, SyntaxErrorsReportLine) {
  try {
    parse_json_text("{\n  \"task\": {\n    \"n\": ,\n  }\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, Overrides) {
  Json j = quadratic_config(4, 8, 0.0, "/tmp");
  apply_override(j, "task.noise_scale=0.5");
  apply_override(j, "methods.0.p=0.3");
  apply_override(j, "output.directory=somewhere");
  apply_override(j, "run.seeds=[7]");
  const auto c = parse_config(j);
  EXPECT_EQ(c.task.quadratic.noise_scale, 0.5);
  EXPECT_EQ(*c.methods[0].p, 0.3);
  EXPECT_EQ(c.output.directory, "somewhere");
  EXPECT_EQ(c.run.seeds, std::vector<std::uint64_t>{7});
  EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(j, "methods.5.p=1"), ConfigError);
}

TEST(Config, DefaultProbabilities) {
  MethodSection m;
  m.method = Method::kMarina;
  m.compressor = "permk";
  auto spec = resolve_compressor(m, 10, 100);
  EXPECT_EQ(spec.kind, CompressorKind::kPermKBigD);
  EXPECT_EQ(resolve_p(m, spec, 10, 100), 1.0 / 10);
  spec = resolve_compressor(m, 100, 10);
  EXPECT_EQ(spec.kind, CompressorKind::kPermKBigN);
  EXPECT_EQ(resolve_p(m, spec, 100, 10), 1.0 / 10);
  m.compressor = "randk";
  m.k = 5;
  spec = resolve_compressor(m, 10, 100);
  EXPECT_EQ(resolve_p(m, spec, 10, 100), 0.05);
  m.k.reset();
  EXPECT_EQ(resolve_compressor(m, 7, 100).k, 15U);
  m.p = 0.4;
  EXPECT_EQ(resolve_p(m, spec, 10, 100), 0.4);
  m.compressor = "randk";
  m.k = 101;
  EXPECT_THROW(resolve_compressor(m, 10, 100), ConfigError);
}

TEST(Cells, GridExpansion) {
  const auto dir = scratch("cells");
  const auto cfg = parse_config(quadratic_config(4, 8, 0.2, dir));
  const auto inst = build_task(cfg.task);
  const auto cells = expand_cells(cfg, inst);
  ASSERT_EQ(cells.size(), 6U);
  std::set<std::string> ids;
  for (const auto& c : cells) {
    ids.insert(c.run_id);
    EXPECT_EQ(fingerprint_of(c.run_id), inst.fingerprint);
  }
  EXPECT_EQ(ids.size(), 6U);
  EXPECT_DOUBLE_EQ(cells[2].gamma, 2 * cells[0].gamma);
  EXPECT_DOUBLE_EQ(cells[4].gamma, 4 * cells[0].gamma);
  const double theory = marina_stepsize(inst.constants, ab_constants(CompressorSpec::permk_big_d(), 4, 8), 0.25,
                                        Objective::kNonconvex);
  EXPECT_EQ(cells[0].gamma, theory);
}

TEST(Generate, DeterministicArtifactAndReport) {
  const auto a = scratch("gen_a");
  const auto b = scratch("gen_b");
  const auto ra = cmd_generate(parse_config(quadratic_config(10, 100, 0.0, a)));
  const auto rb = cmd_generate(parse_config(quadratic_config(10, 100, 0.0, b)));
  EXPECT_EQ(read_text_file(ra.task_file.string()), read_text_file(rb.task_file.string()));
  EXPECT_EQ(ra.report, rb.report);
  EXPECT_NE(ra.report.find("L_pm=0\n"), std::string::npos) << ra.report;

  const auto task = with_f_star(generate_quadratic({10, 100, 1e-3, 0.0, 4}));
  const auto c = quadratic_task_constants(task);
  const double delta0 = full_value(task, task.initial_point()) - *task.known_f_star();
  const ComplexityQuery q{Regime::kDGeN, Objective::kNonconvex, c, 100, 10, delta0, 1e-3};
  const auto permk = comm_complexity(q, {MethodKind::kMarinaPermK, 0.1, 0});
  // with L+- = 0 the rate is L- and each round costs p d + (1 - p) d / n floats
  EXPECT_NEAR(permk.value, delta0 * c.l_minus / 1e-3 * (0.1 * 100 + 0.9 * 10), 1e-9 * permk.value);
  EXPECT_NE(ra.report.find("marina_permk.complexity=" + format_real(permk.value)), std::string::npos) << ra.report;

  Json from_file = quadratic_config(10, 100, 0.0, b);
  from_file["task"] = Json{{"file", ra.task_file.string()}};
  EXPECT_EQ(build_task(parse_config(from_file).task).fingerprint, build_task(parse_config(quadratic_config(10, 100, 0.0, b)).task).fingerprint);
}

TEST(Csv, RoundTripIsExact) {
  const auto task = with_f_star(generate_quadratic({5, 20, 1e-3, 0.3, 2}));
  RunConfig cfg;
  cfg.compressor = CompressorSpec::randk(3);
  cfg.gamma = 0.3;
  cfg.p = 0.2;
  cfg.T = 50;
  cfg.master_seed = 9;
  const auto tr = run_marina(task, cfg);
  const std::string text = trace_csv("abc-run", tr);
  EXPECT_EQ(text.substr(0, text.find('\n')), std::string(kTraceHeader));
  EXPECT_EQ(std::string(kTraceHeader),
            "run_id,method,compressor,n,d,seed,round,theta,cum_floats_per_node,cum_bits_per_node,grad_norm_sq,"
            "f_value,f_gap");
  const auto back = parse_trace_csv(text);
  EXPECT_EQ(back.run_id, "abc-run");
  EXPECT_EQ(back.trace.records, tr.records);
  EXPECT_EQ(back.trace.method, tr.method);
  EXPECT_EQ(back.trace.compressor, tr.compressor);
  EXPECT_EQ(back.trace.n, tr.n);
  EXPECT_EQ(back.trace.d, tr.d);
  EXPECT_EQ(back.trace.seed, tr.seed);
  EXPECT_EQ(trace_csv("abc-run", back.trace), text);
}

TEST(Csv, EmptyGapAndErrors) {
  const auto task = generate_quadratic({3, 6, 1e-3, 0.3, 2});
  const auto tr = run_gd(task, 0.1, 3);
  const auto text = trace_csv("x-y", tr);
  EXPECT_NE(text.find(",\n"), std::string::npos);
  EXPECT_FALSE(parse_trace_csv(text).trace.records[0].f_gap.has_value());
  EXPECT_THROW(parse_trace_csv("bad header\n"), FormatError);
  EXPECT_THROW(parse_trace_csv(std::string(kTraceHeader) + "\n"), FormatError);
  EXPECT_THROW(parse_trace_csv(std::string(kTraceHeader) + "\nx-y,gd,identity,3,6,0,0,0,1,2,3\n"), FormatError);
  EXPECT_THROW(parse_trace_csv(std::string(kTraceHeader) + "\nx-y,gd,identity,3,6,0,0,0,1,2,abc,4,\n"), FormatError);
  EXPECT_THROW(parse_trace_csv(std::string(kTraceHeader) + "\nx-y,sgd,identity,3,6,0,0,0,1,2,3,4,\n"), FormatError);
  EXPECT_THROW(trace_csv("a,b", tr), InvalidArgument);
}

TEST(Run, SummaryAndFiles) {
  const auto dir = scratch("run");
  const auto out = cmd_run(parse_config(quadratic_config(4, 8, 0.2, dir)), true);
  ASSERT_EQ(out.rows.size(), 6U);
  EXPECT_EQ(out.exit_code, kExitOk);
  int best = 0;
  for (const auto& r : out.rows) best += r.best;
  EXPECT_EQ(best, 2);
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const auto file = dir / (out.rows[i].cell.run_id + ".csv");
    ASSERT_TRUE(fs::exists(file));
    const auto back = load_trace_csv(file.string());
    EXPECT_EQ(back.trace.records, out.traces[i].trace.records);
  }
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_EQ(read_text_file((dir / "summary.csv").string()), out.summary_csv);
}

TEST(Run, AllDivergedGivesExitCode) {
  const auto dir = scratch("diverge");
  Json j = quadratic_config(4, 8, 0.2, dir);
  j["methods"][0]["gamma"] = 1e6;
  const auto out = cmd_run(parse_config(j));
  EXPECT_EQ(out.exit_code, kExitDiverged);
  for (const auto& r : out.rows) EXPECT_TRUE(r.diverged);
  EXPECT_NE(out.summary_csv.find(",1,"), std::string::npos);
}

TEST(Compare, TiesAndFingerprints) {
  const auto task = with_f_star(generate_quadratic({5, 20, 1e-3, 0.3, 2}));
  RunConfig m;
  m.compressor = CompressorSpec::permk_big_d();
  m.gamma = 0.5;
  m.p = 1.0;
  m.T = 60;
  const auto marina_tr = run_marina(task, m);
  const auto gd_tr = run_gd(task, 0.5, 60);
  const std::vector<LabelledTrace> same{{"f00d-a", marina_tr}, {"f00d-b", gd_tr}, {"f00d-c", marina_tr}};
  const auto rows = cmd_compare(same, 32.0 * 20 * 30);
  ASSERT_EQ(rows.size(), 3U);
  for (const auto& r : rows) {
    EXPECT_EQ(r.rank, 1U);
    ASSERT_TRUE(r.best.has_value());
    EXPECT_EQ(r.best->round, 30U);
  }
  EXPECT_EQ(gnuplot_series(marina_tr), gnuplot_series(gd_tr));
  const std::vector<LabelledTrace> mixed{{"f00d-a", marina_tr}, {"beef-b", gd_tr}};
  EXPECT_THROW(cmd_compare(mixed, 1e6), ConfigError);
  const auto tiny = cmd_compare({{"f00d-a", marina_tr}}, -1.0);
  EXPECT_FALSE(tiny[0].best.has_value());
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(CCLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Tool, ExitCodes) {
  const auto dir = scratch("tool");
  const auto cfg = dir / "cfg.json";
  std::ofstream(cfg) << quadratic_config(4, 8, 0.2, dir / "out").dump(2);
  EXPECT_EQ(run_tool("run -c " + cfg.string()), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
  EXPECT_EQ(run_tool("run -c " + cfg.string() + " --set task.lambda=-1"), kExitConfig);
  EXPECT_EQ(run_tool("run -c " + cfg.string() + " --set methods.0.gamma=1e6"), kExitDiverged);
  std::ofstream(dir / "blocker") << "x";
  EXPECT_EQ(run_tool("run -c " + cfg.string() + " --out " + (dir / "blocker" / "sub").string()), kExitIo);
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{ \"task\": ";
  EXPECT_EQ(run_tool("constants -c " + bad.string()), kExitConfig);
  EXPECT_EQ(run_tool("constants -c " + cfg.string()), kExitOk);
  EXPECT_EQ(run_tool("generate -c " + cfg.string() + " --out " + (dir / "gen").string()), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "gen" / "task.txt"));
  std::string csvs;
  for (const auto& e : fs::directory_iterator(dir / "out"))
    if (e.path().extension() == ".csv" && e.path().filename() != "summary.csv") csvs += " " + e.path().string();
  EXPECT_EQ(run_tool("compare -b 1e4 -o " + (dir / "cmp").string() + csvs), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "cmp" / "ranking.csv"));
  EXPECT_EQ(run_tool("compare -b 1e4 " + (dir / "out" / "summary.csv").string()), kExitConfig);
}

}  // namespace
}  // namespace cclab
