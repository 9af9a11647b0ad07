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

// Experiment configuration: a JSON document with task, methods, run, output
// and report sections. Unknown keys are rejected.

#ifndef CCLAB_CLI_CONFIG_HPP
#define CCLAB_CLI_CONFIG_HPP

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "cclab/analysis/stepsize.hpp"
#include "cclab/compressors/compressors.hpp"
#include "cclab/core/error.hpp"
#include "cclab/engine/engine.hpp"
#include "cclab/problems/autoencoder.hpp"
#include "cclab/problems/quadratic.hpp"

namespace cclab {

using Json = nlohmann::json;

enum class TaskKind { kQuadratic, kAutoencoder, kFile };

struct TaskSection {
  TaskKind kind = TaskKind::kQuadratic;
  QuadraticParams quadratic;
  AutoencoderParams autoencoder;
  std::string file;
  Json canonical;  // the section as parsed, with defaults filled in
};

/// "theory", "theory*{1,2,4}" (also with x or the multiplication sign), or a number.
struct GammaSpec {
  bool theory = true;
  double value = 0.0;
  std::vector<double> multipliers{1.0};
};

struct MethodSection {
  std::string name;
  Method method = Method::kMarina;
  std::string compressor = "permk";
  std::optional<std::size_t> k;
  std::optional<std::size_t> blocks;
  bool shared = false;
  QuantizerKind quantizer = QuantizerKind::kNone;
  std::optional<double> p;
  GammaSpec gamma;
};

struct RunSection {
  std::size_t T = 1000;
  std::vector<std::uint64_t> seeds{0};
  Metering metering;
  Objective objective = Objective::kNonconvex;
  std::size_t threads = 1;  // per run, over workers
  std::size_t jobs = 1;     // concurrent runs
};

struct OutputSection {
  std::string directory = "cclab_out";
  bool csv = true;
};

struct ReportSection {
  double eps = 1e-3;
};

struct ExperimentConfig {
  TaskSection task;
  std::vector<MethodSection> methods;
  RunSection run;
  OutputSection output;
  ReportSection report;
};

namespace detail {

class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& at(const std::string& key) const {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field(key), "missing required field");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) const {
    const Json& v = at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
        return v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        const bool negative = v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0;
        if (!v.is_number_integer() || (std::is_unsigned_v<T> && negative))
          throw ConfigError(field(key), "expected a nonnegative integer");
        return v.get<T>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        return v.get<T>();
      } else {
        if (!v.is_string()) throw ConfigError(field(key), "expected a string");
        return v.get<T>();
      }
    } catch (const Json::exception& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  template <class T>
  T get_or(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  template <class T>
  std::optional<T> get_opt(const std::string& key) const {
    if (!has(key) || j_.at(key).is_null()) {
      used_.insert(key);
      return std::nullopt;
    }
    return get<T>(key);
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
  }

 private:
  const Json& j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& s, const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a number, got '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError(field, "expected a number, got '" + s + "'");
  return v;
}

}  // namespace detail

inline GammaSpec parse_gamma(const Json& j, const std::string& field) {
  GammaSpec g;
  if (j.is_number()) {
    g.theory = false;
    g.value = j.get<double>();
    detail::require(std::isfinite(g.value) && g.value > 0.0, field, "gamma must be positive");
    return g;
  }
  detail::require(j.is_string(), field, "expected a number or a string such as \"theory*{1,2,4}\"");
  std::string s = detail::trim(j.get<std::string>());
  const std::string head = "theory";
  detail::require(s.rfind(head, 0) == 0, field, "expected \"theory\" optionally followed by *{multipliers}");
  std::string rest = detail::trim(s.substr(head.size()));
  if (rest.empty()) return g;
  const std::string times = "\xC3\x97";  // U+00D7
  if (rest.rfind(times, 0) == 0) rest = rest.substr(times.size());
  else if (rest[0] == '*' || rest[0] == 'x' || rest[0] == 'X') rest = rest.substr(1);
  else throw ConfigError(field, "expected '*', 'x' or the multiplication sign after \"theory\"");
  rest = detail::trim(rest);
  g.multipliers.clear();
  if (!rest.empty() && rest.front() == '{') {
    detail::require(rest.back() == '}', field, "unterminated multiplier list");
    std::stringstream ss(rest.substr(1, rest.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) g.multipliers.push_back(detail::parse_number(detail::trim(item), field));
  } else {
    g.multipliers.push_back(detail::parse_number(rest, field));
  }
  detail::require(!g.multipliers.empty(), field, "empty multiplier list");
  for (double m : g.multipliers) detail::require(m > 0.0, field, "multipliers must be positive");
  return g;
}

inline TaskSection parse_task(const Json& j, const std::filesystem::path& base_dir) {
  detail::Section s(j, "task");
  TaskSection t;
  if (s.has("file")) {
    t.kind = TaskKind::kFile;
    std::filesystem::path f = s.get<std::string>("file");
    if (f.is_relative()) f = base_dir / f;
    detail::require(std::filesystem::exists(f), "task.file", "file not found: " + f.string());
    t.file = f.string();
    s.reject_unknown();
    t.canonical = Json{{"file", t.file}};
    return t;
  }
  const std::string kind = s.get<std::string>("kind");
  if (kind == "quadratic") {
    auto& q = t.quadratic;
    q.n = s.get<std::size_t>("n");
    q.d = s.get<std::size_t>("d");
    q.lambda = s.get<double>("lambda");
    q.noise_scale = s.get_or<double>("noise_scale", 0.0);
    q.seed = s.get_or<std::uint64_t>("seed", 0);
    detail::require(q.n >= 1, "task.n", "must be at least 1");
    detail::require(q.d >= 2, "task.d", "must be at least 2");
    detail::require(q.lambda > 0.0, "task.lambda", "must be positive");
    detail::require(q.noise_scale >= 0.0, "task.noise_scale", "must be nonnegative");
    t.canonical = Json{{"kind", kind}, {"n", q.n}, {"d", q.d}, {"lambda", q.lambda},
                       {"noise_scale", q.noise_scale}, {"seed", q.seed}};
  } else if (kind == "autoencoder") {
    t.kind = TaskKind::kAutoencoder;
    auto& a = t.autoencoder;
    a.n = s.get<std::size_t>("n");
    a.d_e = s.get<std::size_t>("d_e");
    a.lambda = s.get_or<double>("lambda", 0.0);
    a.p_hat = s.get_or<double>("p_hat", 0.5);
    a.seed = s.get_or<std::uint64_t>("seed", 0);
    if (auto path = s.get_opt<std::string>("idx_path")) {
      std::filesystem::path f = *path;
      if (f.is_relative()) f = base_dir / f;
      detail::require(std::filesystem::exists(f), "task.idx_path", "file not found: " + f.string());
      a.idx_path = f.string();
    }
    a.d_f = s.get_or<std::size_t>("d_f", a.d_f);
    a.items_per_shard = s.get_or<std::size_t>("items_per_shard", a.items_per_shard);
    a.clusters = s.get_or<std::size_t>("clusters", a.clusters);
    a.spread = s.get_or<double>("spread", a.spread);
    detail::require(a.n >= 1, "task.n", "must be at least 1");
    detail::require(a.d_e >= 1, "task.d_e", "must be at least 1");
    detail::require(a.lambda >= 0.0, "task.lambda", "must be nonnegative");
    detail::require(a.p_hat >= 0.0 && a.p_hat <= 1.0, "task.p_hat", "must lie in [0, 1]");
    t.canonical = Json{{"kind", kind}, {"n", a.n}, {"d_f", a.d_f}, {"d_e", a.d_e}, {"lambda", a.lambda},
                       {"p_hat", a.p_hat}, {"seed", a.seed}, {"idx_path", a.idx_path},
                       {"items_per_shard", a.items_per_shard}, {"clusters", a.clusters},
                       {"spread", a.spread}};
  } else {
    throw ConfigError("task.kind", "expected \"quadratic\" or \"autoencoder\", got \"" + kind + "\"");
  }
  s.reject_unknown();
  return t;
}

inline Method parse_method_name(const std::string& m, const std::string& field) {
  if (m == "marina") return Method::kMarina;
  if (m == "ef21") return Method::kEF21;
  if (m == "gd") return Method::kGD;
  throw ConfigError(field, "expected \"marina\", \"ef21\" or \"gd\", got \"" + m + "\"");
}

inline MethodSection parse_method(const Json& j, const std::string& path) {
  detail::Section s(j, path);
  MethodSection m;
  m.method = parse_method_name(s.get<std::string>("method"), s.field("method"));
  const std::string fallback = m.method == Method::kEF21 ? "topk" : m.method == Method::kGD ? "identity" : "permk";
  m.compressor = s.get_or<std::string>("compressor", fallback);
  static const std::set<std::string> known{"identity", "permk", "permk_d", "permk_n", "randk", "topk", "blockperm"};
  detail::require(known.count(m.compressor) > 0, s.field("compressor"), "unknown compressor \"" + m.compressor + "\"");
  m.k = s.get_opt<std::size_t>("k");
  m.blocks = s.get_opt<std::size_t>("blocks");
  m.shared = s.get_or<bool>("shared", false);
  const std::string q = s.get_or<std::string>("quantize", "none");
  if (q == "pow2") m.quantizer = QuantizerKind::kPowerOfTwo;
  else detail::require(q == "none", s.field("quantize"), "expected \"none\" or \"pow2\"");
  m.p = s.get_opt<double>("p");
  if (m.p) detail::require(*m.p > 0.0 && *m.p <= 1.0, s.field("p"), "must lie in (0, 1]");
  if (s.has("gamma")) m.gamma = parse_gamma(s.at("gamma"), s.field("gamma"));
  m.name = s.get_or<std::string>("name", "");
  if (m.method == Method::kEF21)
    detail::require(m.compressor == "topk" || m.compressor == "identity", s.field("compressor"),
                    "ef21 needs a contractive compressor (topk or identity)");
  if (m.method == Method::kGD) detail::require(m.compressor == "identity", s.field("compressor"), "gd sends full gradients");
  s.reject_unknown();
  return m;
}

inline RunSection parse_run(const Json& j) {
  detail::Section s(j, "run");
  RunSection r;
  r.T = s.get_or<std::size_t>("T", r.T);
  if (s.has("seeds")) {
    const Json& seeds = s.at("seeds");
    detail::require(seeds.is_array() && !seeds.empty(), "run.seeds", "expected a nonempty list of integers");
    r.seeds.clear();
    for (const auto& v : seeds) {
      detail::require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0), "run.seeds",
                      "expected nonnegative integers");
      r.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  r.metering.bits_per_coordinate = s.get_or<unsigned>("bits_per_coordinate", 32);
  detail::require(r.metering.bits_per_coordinate >= 1, "run.bits_per_coordinate", "must be positive");
  r.metering.count_index_bits = s.get_or<bool>("count_index_bits", false);
  const std::string obj = s.get_or<std::string>("objective", "nonconvex");
  if (obj == "pl") r.objective = Objective::kPL;
  else detail::require(obj == "nonconvex", "run.objective", "expected \"nonconvex\" or \"pl\"");
  r.threads = s.get_or<std::size_t>("threads", 1);
  r.jobs = s.get_or<std::size_t>("jobs", 1);
  s.reject_unknown();
  return r;
}

inline std::string default_method_name(const MethodSection& m) {
  std::string name = to_string(m.method) + "_" + m.compressor;
  if (m.k) name += std::to_string(*m.k);
  if (m.shared) name += "_shared";
  if (m.quantizer == QuantizerKind::kPowerOfTwo) name += "_pow2";
  return name;
}

inline ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = ".") {
  detail::Section s(j, "");
  ExperimentConfig c;
  c.task = parse_task(s.at("task"), base_dir);
  if (s.has("methods")) {
    const Json& ms = s.at("methods");
    detail::require(ms.is_array() && !ms.empty(), "methods", "expected a nonempty list");
    for (std::size_t i = 0; i < ms.size(); ++i) c.methods.push_back(parse_method(ms[i], "methods[" + std::to_string(i) + "]"));
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    auto& m = c.methods[i];
    if (m.name.empty()) {
      m.name = default_method_name(m);
      if (names.count(m.name)) m.name += "_" + std::to_string(i);
    }
    for (char ch : m.name)
      detail::require(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.',
                      "methods[" + std::to_string(i) + "].name", "only letters, digits, '_' and '.' are allowed");
    detail::require(names.insert(m.name).second, "methods[" + std::to_string(i) + "].name", "duplicate name");
  }
  if (s.has("run")) c.run = parse_run(s.at("run"));
  if (s.has("output")) {
    detail::Section o(s.at("output"), "output");
    c.output.directory = o.get_or<std::string>("directory", c.output.directory);
    c.output.csv = o.get_or<bool>("csv", true);
    o.reject_unknown();
  }
  if (s.has("report")) {
    detail::Section r(s.at("report"), "report");
    c.report.eps = r.get_or<double>("eps", c.report.eps);
    detail::require(c.report.eps > 0.0, "report.eps", "must be positive");
    r.reject_unknown();
  }
  s.reject_unknown();
  return c;
}

/// Parses JSON text; syntax errors report line and column.
inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Sets a dotted path ("run.T", "methods.0.p") to a value given as text;
/// the text is read as JSON when possible, otherwise as a string.
inline void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &j;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const bool last = i + 1 == keys.size();
    if (node->is_array()) {
      const std::size_t idx = static_cast<std::size_t>(detail::parse_number(keys[i], path));
      if (idx >= node->size()) throw ConfigError(path, "index out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) throw ConfigError(path, "cannot descend into a scalar");
      node = &(*node)[keys[i]];
    }
    if (last) *node = value;
  }
}

inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  Json j = parse_json_text(read_text_file(path));
  for (const auto& o : overrides) apply_override(j, o);
  return parse_config(j, std::filesystem::path(path).parent_path());
}

// -----------------------------------------------------------------------------
// Resolution against a concrete task shape

inline Partition contiguous_partition(std::size_t d, std::size_t m) {
  Partition part(m);
  for (std::size_t b = 0; b < m; ++b)
    for (std::size_t j = b * d / m; j < (b + 1) * d / m; ++j) part[b].push_back(static_cast<std::uint32_t>(j));
  return part;
}

inline std::size_t default_k(std::size_t n, std::size_t d) { return std::max<std::size_t>(1, (d + n - 1) / n); }

inline CompressorSpec resolve_compressor(const MethodSection& m, std::size_t n, std::size_t d) {
  CompressorSpec spec;
  const std::string& c = m.compressor;
  if (c == "identity") spec = CompressorSpec::identity();
  else if (c == "permk") spec = CompressorSpec::permk(n, d);
  else if (c == "permk_d") spec = CompressorSpec::permk_big_d();
  else if (c == "permk_n") spec = CompressorSpec::permk_big_n();
  else if (c == "randk") spec = CompressorSpec::randk(m.k.value_or(default_k(n, d)), m.shared);
  else if (c == "topk") spec = CompressorSpec::topk(m.k.value_or(default_k(n, d)));
  else if (c == "blockperm") spec = CompressorSpec::block_perm(contiguous_partition(d, m.blocks.value_or(std::min(n, d))));
  else throw ConfigError("compressor", "unknown compressor \"" + c + "\"");
  if (m.quantizer != QuantizerKind::kNone) spec = CompressorSpec::composed(spec, m.quantizer);
  try {
    validate(spec, n, d);
  } catch (const InvalidArgument& e) {
    throw ConfigError(m.name + ".compressor", e.what());
  }
  return spec;
}

/// MARINA synchronization probability: the configured p, or the ratio of
/// the compressed message size to d.
inline double resolve_p(const MethodSection& m, const CompressorSpec& spec, std::size_t n, std::size_t d) {
  if (m.method != Method::kMarina) return 1.0;
  if (m.p) return *m.p;
  const CompressorSpec& base = spec.kind == CompressorKind::kComposed ? *spec.inner : spec;
  const double dd = static_cast<double>(d);
  switch (base.kind) {
    case CompressorKind::kPermKBigD: return 1.0 / static_cast<double>(n);
    case CompressorKind::kPermKBigN: return 1.0 / dd;
    case CompressorKind::kRandK: return static_cast<double>(base.k) / dd;
    case CompressorKind::kBlockPerm: {
      std::size_t largest = 0;
      for (const auto& b : base.partition) largest = std::max(largest, b.size());
      return static_cast<double>(largest) / dd;
    }
    default: return 1.0;
  }
}

}  // namespace cclab

#endif  // CCLAB_CLI_CONFIG_HPP
