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

#ifndef CCLAB_COMPRESSORS_SPEC_HPP
#define CCLAB_COMPRESSORS_SPEC_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cclab/core/error.hpp"

namespace cclab {

enum class CompressorKind {
  kIdentity,
  kPermKBigD,
  kPermKBigN,
  kRandK,
  kTopK,
  kBlockPerm,
  kComposed,
};

enum class QuantizerKind {
  kNone,        // identity, omega = 0
  kPowerOfTwo,  // unbiased stochastic rounding to the sign * 2^e grid
};

/// Variance bound of stochastic rounding between consecutive powers of two:
/// max over t in [1, 2] of (2 - t)(t - 1) / t^2, attained at t = 4/3.
inline constexpr double kPowerOfTwoRoundingOmega = 0.125;

inline double quantizer_omega(QuantizerKind q) {
  return q == QuantizerKind::kPowerOfTwo ? kPowerOfTwoRoundingOmega : 0.0;
}

using Partition = std::vector<std::vector<std::uint32_t>>;

struct CompressorSpec {
  CompressorKind kind = CompressorKind::kIdentity;
  std::size_t k = 0;       // RandK / TopK
  bool shared = false;     // RandK: draw indices from the round stream
  Partition partition;     // BlockPerm
  std::shared_ptr<const CompressorSpec> inner;  // Composed
  QuantizerKind quantizer = QuantizerKind::kNone;

  static CompressorSpec identity() { return {}; }
  static CompressorSpec permk_big_d() { return with_kind(CompressorKind::kPermKBigD); }
  static CompressorSpec permk_big_n() { return with_kind(CompressorKind::kPermKBigN); }

  /// PermK variant matching the shape; d == n uses the d >= n construction.
  static CompressorSpec permk(std::size_t n, std::size_t d) {
    return d >= n ? permk_big_d() : permk_big_n();
  }

  static CompressorSpec randk(std::size_t k, bool shared = false) {
    CompressorSpec s = with_kind(CompressorKind::kRandK);
    s.k = k;
    s.shared = shared;
    return s;
  }

  static CompressorSpec topk(std::size_t k) {
    CompressorSpec s = with_kind(CompressorKind::kTopK);
    s.k = k;
    return s;
  }

  static CompressorSpec block_perm(Partition partition) {
    CompressorSpec s = with_kind(CompressorKind::kBlockPerm);
    s.partition = std::move(partition);
    return s;
  }

  static CompressorSpec composed(CompressorSpec inner, QuantizerKind quantizer) {
    CompressorSpec s = with_kind(CompressorKind::kComposed);
    s.inner = std::make_shared<const CompressorSpec>(std::move(inner));
    s.quantizer = quantizer;
    return s;
  }

  bool is_permk() const {
    return kind == CompressorKind::kPermKBigD || kind == CompressorKind::kPermKBigN;
  }

 private:
  static CompressorSpec with_kind(CompressorKind kind) {
    CompressorSpec s;
    s.kind = kind;
    return s;
  }
};

inline std::string to_string(CompressorKind kind) {
  switch (kind) {
    case CompressorKind::kIdentity: return "identity";
    case CompressorKind::kPermKBigD: return "permk";
    case CompressorKind::kPermKBigN: return "permk_n";
    case CompressorKind::kRandK: return "randk";
    case CompressorKind::kTopK: return "topk";
    case CompressorKind::kBlockPerm: return "blockperm";
    case CompressorKind::kComposed: return "composed";
  }
  return "?";
}

/// Short human-readable label, e.g. "randk10" or "permk".
inline std::string label(const CompressorSpec& s) {
  switch (s.kind) {
    case CompressorKind::kRandK:
      return (s.shared ? "randk_shared" : "randk") + std::to_string(s.k);
    case CompressorKind::kTopK: return "topk" + std::to_string(s.k);
    case CompressorKind::kBlockPerm:
      return "blockperm" + std::to_string(s.partition.size());
    case CompressorKind::kComposed:
      return "q(" + (s.inner ? label(*s.inner) : std::string("?")) + ")";
    default: return to_string(s.kind);
  }
}

/// Per-round identity of one worker's compressor invocation.
struct RoundContext {
  std::uint64_t master_seed = 0;
  std::uint64_t round = 0;
  std::size_t worker_id = 0;
  std::size_t n = 1;
  std::size_t d = 1;
};

/// Constants of the AB inequality
///   E|mean C_i(a_i) - mean a_i|^2 <= A mean|a_i|^2 - B |mean a_i|^2,
/// plus the individual variance parameter omega when it exists.
struct ABConstants {
  double A = 0.0;
  double B = 0.0;
  std::optional<double> omega;
  bool approximate = false;
};

}  // namespace cclab

#endif  // CCLAB_COMPRESSORS_SPEC_HPP
