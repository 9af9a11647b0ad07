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

// Text dump of a quadratic task. Version 1 layout, one token group per line:
//
//   cclab-task 1
//   kind quadratic
//   n <int>  d <int>  lambda <real>  noise_scale <real>  seed <uint64>
//   shift <real>
//   f_star <real | none>
//   scales            followed by n lines <real>
//   b <count>         followed by count lines "<worker> <coord> <real>"
//   x0 <count>        followed by count lines "<coord> <real>"
//   end
//
// Reals are printed with 17 significant digits, so a dump round-trips bit
// for bit. Zero entries of b and x0 are omitted.

#ifndef CCLAB_PROBLEMS_SERIALIZE_HPP
#define CCLAB_PROBLEMS_SERIALIZE_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cclab/core/error.hpp"
#include "cclab/problems/quadratic.hpp"

namespace cclab {

inline constexpr int kTaskFormatVersion = 1;

/// Shortest representation that parses back to the same double.
inline std::string format_real(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_quadratic(std::ostream& out, const QuadraticTask& task) {
  const auto& p = task.params();
  out << "cclab-task " << kTaskFormatVersion << "\n";
  out << "kind quadratic\n";
  out << "n " << task.workers() << "\n";
  out << "d " << task.dim() << "\n";
  out << "lambda " << format_real(p.lambda) << "\n";
  out << "noise_scale " << format_real(p.noise_scale) << "\n";
  out << "seed " << p.seed << "\n";
  out << "shift " << format_real(task.shift()) << "\n";
  out << "f_star " << (task.known_f_star() ? format_real(*task.known_f_star()) : "none") << "\n";
  out << "scales\n";
  for (double s : task.scales()) out << format_real(s) << "\n";
  std::size_t nnz = 0;
  for (const auto& bi : task.b())
    for (double v : bi) nnz += v != 0.0;
  out << "b " << nnz << "\n";
  for (std::size_t i = 0; i < task.workers(); ++i)
    for (std::size_t j = 0; j < task.dim(); ++j)
      if (task.b()[i][j] != 0.0) out << i << " " << j << " " << format_real(task.b()[i][j]) << "\n";
  nnz = 0;
  for (double v : task.initial_point()) nnz += v != 0.0;
  out << "x0 " << nnz << "\n";
  for (std::size_t j = 0; j < task.dim(); ++j)
    if (task.initial_point()[j] != 0.0) out << j << " " << format_real(task.initial_point()[j]) << "\n";
  out << "end\n";
}

inline std::string dump_quadratic(const QuadraticTask& task) {
  std::ostringstream os;
  write_quadratic(os, task);
  return os.str();
}

namespace detail {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw FormatError("task dump: unexpected end of input");
    return w;
  }

  void expect(const std::string& key) {
    const std::string w = word();
    if (w != key) throw FormatError("task dump: expected '" + key + "', found '" + w + "'");
  }

  double real() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end == w.c_str() || *end != '\0') throw FormatError("task dump: bad number '" + w + "'");
    return v;
  }

  std::uint64_t integer() {
    const std::string w = word();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(w.c_str(), &end, 10);
    if (end == w.c_str() || *end != '\0' || w.front() == '-')
      throw FormatError("task dump: bad integer '" + w + "'");
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace detail

inline QuadraticTask read_quadratic(std::istream& in) {
  detail::TokenReader r(in);
  r.expect("cclab-task");
  const auto version = r.integer();
  if (version != kTaskFormatVersion)
    throw FormatError("task dump: unsupported version " + std::to_string(version));
  r.expect("kind");
  const std::string kind = r.word();
  if (kind != "quadratic") throw FormatError("task dump: unsupported kind '" + kind + "'");
  QuadraticParams p;
  r.expect("n");
  p.n = r.integer();
  r.expect("d");
  p.d = r.integer();
  r.expect("lambda");
  p.lambda = r.real();
  r.expect("noise_scale");
  p.noise_scale = r.real();
  r.expect("seed");
  p.seed = r.integer();
  r.expect("shift");
  const double shift = r.real();
  r.expect("f_star");
  const std::string fs = r.word();
  if (p.n == 0 || p.d == 0) throw FormatError("task dump: empty task");
  r.expect("scales");
  std::vector<double> scales(p.n);
  for (double& s : scales) s = r.real();
  r.expect("b");
  std::vector<Vector> b(p.n, Vector(p.d, 0.0));
  const auto nb = r.integer();
  for (std::uint64_t k = 0; k < nb; ++k) {
    const auto i = r.integer();
    const auto j = r.integer();
    if (i >= p.n || j >= p.d) throw FormatError("task dump: b index out of range");
    b[i][j] = r.real();
  }
  r.expect("x0");
  Vector x0(p.d, 0.0);
  const auto nx = r.integer();
  for (std::uint64_t k = 0; k < nx; ++k) {
    const auto j = r.integer();
    if (j >= p.d) throw FormatError("task dump: x0 index out of range");
    x0[j] = r.real();
  }
  r.expect("end");
  QuadraticTask task(p, std::move(scales), shift, std::move(b), std::move(x0));
  if (fs != "none") {
    char* end = nullptr;
    const double v = std::strtod(fs.c_str(), &end);
    if (*end != '\0') throw FormatError("task dump: bad f_star");
    task.set_f_star(v);
  }
  return task;
}

inline QuadraticTask parse_quadratic(const std::string& text) {
  std::istringstream is(text);
  return read_quadratic(is);
}

}  // namespace cclab

#endif  // CCLAB_PROBLEMS_SERIALIZE_HPP
