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

// Trace CSV: one file per run, one row per round.

#ifndef CCLAB_CLI_CSV_HPP
#define CCLAB_CLI_CSV_HPP

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cclab/core/error.hpp"
#include "cclab/engine/trace.hpp"
#include "cclab/problems/serialize.hpp"

namespace cclab {

inline constexpr std::string_view kTraceHeader =
    "run_id,method,compressor,n,d,seed,round,theta,cum_floats_per_node,cum_bits_per_node,"
    "grad_norm_sq,f_value,f_gap";

struct LabelledTrace {
  std::string run_id;
  RunTrace trace;
};

inline Method parse_method_label(const std::string& s) {
  if (s == "marina") return Method::kMarina;
  if (s == "ef21") return Method::kEF21;
  if (s == "gd") return Method::kGD;
  throw FormatError("trace csv: unknown method '" + s + "'");
}

inline void write_trace_csv(std::ostream& out, const std::string& run_id, const RunTrace& trace) {
  for (char c : run_id + trace.compressor)
    if (c == ',' || c == '\n' || c == '"') throw InvalidArgument("trace csv: run id or label contains a separator");
  out << kTraceHeader << "\n";
  const std::string prefix = run_id + "," + to_string(trace.method) + "," + trace.compressor + "," +
                             std::to_string(trace.n) + "," + std::to_string(trace.d) + "," +
                             std::to_string(trace.seed) + ",";
  for (const auto& r : trace.records) {
    out << prefix << r.round << "," << r.theta << "," << format_real(r.cum_floats_per_node) << ","
        << format_real(r.cum_bits_per_node) << "," << format_real(r.grad_norm_sq) << "," << format_real(r.f_value)
        << "," << (r.f_gap ? format_real(*r.f_gap) : "") << "\n";
  }
}

inline std::string trace_csv(const std::string& run_id, const RunTrace& trace) {
  std::ostringstream ss;
  write_trace_csv(ss, run_id, trace);
  return ss.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double csv_real(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw FormatError("trace csv: line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

inline std::uint64_t csv_uint(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size())
    throw FormatError("trace csv: line " + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

}  // namespace detail

/// Reads one run. Throws FormatError on a wrong header, inconsistent
/// run metadata between rows, or malformed numbers.
inline LabelledTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("trace csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw FormatError("trace csv: unexpected header");
  LabelledTrace out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 13) throw FormatError("trace csv: line " + std::to_string(lineno) + ": expected 13 columns");
    RunTrace& t = out.trace;
    const Method method = parse_method_label(cells[1]);
    const std::size_t n = detail::csv_uint(cells[3], lineno);
    const std::size_t d = detail::csv_uint(cells[4], lineno);
    const std::uint64_t seed = detail::csv_uint(cells[5], lineno);
    if (t.records.empty()) {
      out.run_id = cells[0];
      t.method = method;
      t.compressor = cells[2];
      t.n = n;
      t.d = d;
      t.seed = seed;
    } else if (cells[0] != out.run_id || method != t.method || cells[2] != t.compressor || n != t.n || d != t.d ||
               seed != t.seed) {
      throw FormatError("trace csv: line " + std::to_string(lineno) + ": rows from more than one run");
    }
    TraceRecord r;
    r.round = detail::csv_uint(cells[6], lineno);
    const auto theta = detail::csv_uint(cells[7], lineno);
    if (theta > 1) throw FormatError("trace csv: line " + std::to_string(lineno) + ": theta must be 0 or 1");
    r.theta = static_cast<int>(theta);
    r.cum_floats_per_node = detail::csv_real(cells[8], lineno);
    r.cum_bits_per_node = detail::csv_real(cells[9], lineno);
    r.grad_norm_sq = detail::csv_real(cells[10], lineno);
    r.f_value = detail::csv_real(cells[11], lineno);
    if (!cells[12].empty()) r.f_gap = detail::csv_real(cells[12], lineno);
    if (!t.records.empty() && r.round != t.records.back().round + 1)
      throw FormatError("trace csv: line " + std::to_string(lineno) + ": rounds are not consecutive");
    t.records.push_back(r);
  }
  if (out.trace.records.empty()) throw FormatError("trace csv: no rows");
  return out;
}

inline LabelledTrace parse_trace_csv(const std::string& text) {
  std::istringstream ss(text);
  return read_trace_csv(ss);
}

inline LabelledTrace load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_trace_csv(in);
}

}  // namespace cclab

#endif  // CCLAB_CLI_CSV_HPP
