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

// Compression operators and their AB / omega constants.
//
// Every randomized operator is split in two layers:
//   * a Draw, the realization of the randomness shared by all workers in a
//     round (coordinate permutation, worker permutation, shared index set);
//   * a deterministic application of that realization to one worker's input.
// The shared draw is a pure function of (master_seed, round), so each worker
// can regenerate it locally. Worker-private randomness (independent RandK,
// quantization) comes from a stream keyed additionally by the worker id.
// Exhaustive verification enumerates Draws directly instead of sampling them.

#ifndef CCLAB_COMPRESSORS_COMPRESSORS_HPP
#define CCLAB_COMPRESSORS_COMPRESSORS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cclab/compressors/sparse_message.hpp"
#include "cclab/compressors/spec.hpp"
#include "cclab/core/error.hpp"
#include "cclab/core/rng.hpp"

namespace cclab {

using Permutation = std::vector<std::uint32_t>;

/// Uniform permutation of {0..len-1} by the Fisher-Yates shuffle, O(len).
inline Permutation sample_permutation(std::size_t len, KeyedStream& stream) {
  CCLAB_REQUIRE(len >= 1, "sample_permutation: len must be positive");
  return fisher_yates(len, stream);
}

/// Uniform k-subset of {0..d-1} in ascending order (Floyd's algorithm).
inline std::vector<std::uint32_t> sample_subset(std::size_t d, std::size_t k,
                                                KeyedStream& stream) {
  CCLAB_REQUIRE(k <= d, "sample_subset: k exceeds d");
  std::vector<std::uint32_t> chosen;
  chosen.reserve(k);
  std::vector<bool> taken(d, false);
  for (std::size_t j = d - k; j < d; ++j) {
    const auto t = static_cast<std::uint32_t>(stream.below(j + 1));
    const auto pick = taken[t] ? static_cast<std::uint32_t>(j) : t;
    taken[pick] = true;
    chosen.push_back(pick);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

/// Realization of a round's randomness. Empty fields are unused by the kind.
struct Draw {
  Permutation coord_perm;   // PermK (d >= n)
  Permutation worker_perm;  // PermK remainder assignment, PermK (n >= d), BlockPerm
  std::vector<std::uint32_t> shared_subset;  // shared-seed RandK
  /// When non-empty, overrides the private RandK draw of each worker.
  std::vector<std::vector<std::uint32_t>> worker_subsets;
};

// -----------------------------------------------------------------------------
// Validation

inline void validate_partition(const Partition& partition, std::size_t n, std::size_t d) {
  CCLAB_REQUIRE(!partition.empty(), "block partition: no blocks");
  CCLAB_REQUIRE(partition.size() <= n, "block partition: more blocks than workers");
  std::vector<bool> covered(d, false);
  std::size_t count = 0;
  for (const auto& block : partition) {
    CCLAB_REQUIRE(!block.empty(), "block partition: empty block");
    for (std::uint32_t j : block) {
      CCLAB_REQUIRE(j < d, "block partition: index out of range");
      CCLAB_REQUIRE(!covered[j], "block partition: blocks overlap");
      covered[j] = true;
      ++count;
    }
  }
  CCLAB_REQUIRE(count == d, "block partition: blocks do not cover all coordinates");
}

inline void validate(const CompressorSpec& spec, std::size_t n, std::size_t d) {
  CCLAB_REQUIRE(n >= 1 && d >= 1, "compressor: n and d must be positive");
  switch (spec.kind) {
    case CompressorKind::kIdentity: return;
    case CompressorKind::kPermKBigD:
      CCLAB_REQUIRE(d >= n, "permk (d >= n): requires d >= n, use the n >= d variant");
      return;
    case CompressorKind::kPermKBigN:
      CCLAB_REQUIRE(n >= d, "permk (n >= d): requires n >= d");
      CCLAB_REQUIRE(n > 1, "permk (n >= d): requires n > 1");
      return;
    case CompressorKind::kRandK:
    case CompressorKind::kTopK:
      CCLAB_REQUIRE(spec.k >= 1 && spec.k <= d, "sparsifier: requires 1 <= k <= d");
      return;
    case CompressorKind::kBlockPerm: validate_partition(spec.partition, n, d); return;
    case CompressorKind::kComposed:
      CCLAB_REQUIRE(spec.inner != nullptr, "composed compressor: missing inner spec");
      CCLAB_REQUIRE(spec.inner->kind != CompressorKind::kComposed,
                    "composed compressor: nested composition is not supported");
      validate(*spec.inner, n, d);
      return;
  }
}

// -----------------------------------------------------------------------------
// Deterministic applications of a realization

namespace detail {

inline void sort_entries(SparseMessage& m) {
  std::sort(m.entries.begin(), m.entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
}

inline void check_input(std::span<const double> x, const RoundContext& ctx) {
  CCLAB_REQUIRE(x.size() == ctx.d, "compressor: input dimension differs from ctx.d");
  CCLAB_REQUIRE(ctx.worker_id < ctx.n, "compressor: worker_id out of range");
}

}  // namespace detail

/// C_i(x) = n * sum over worker i's block of x_{pi_j} e_{pi_j}. With
/// d = qn + r, worker i owns coord_perm[qi .. qi+q) plus, when
/// worker_perm[i] < r, the remainder coordinate coord_perm[qn + worker_perm[i]].
inline SparseMessage apply_permk_big_d(std::span<const double> x, std::size_t n,
                                       std::size_t worker, const Permutation& coord_perm,
                                       const Permutation& worker_perm) {
  const std::size_t d = x.size();
  const std::size_t q = d / n;
  const std::size_t r = d % n;
  CCLAB_REQUIRE(coord_perm.size() == d, "permk: coordinate permutation has wrong length");
  CCLAB_REQUIRE(r == 0 || worker_perm.size() == n, "permk: missing worker permutation");
  const double scale = static_cast<double>(n);
  SparseMessage m = SparseMessage::zero(d);
  m.entries.reserve(q + 1);
  for (std::size_t j = q * worker; j < q * (worker + 1); ++j)
    m.push(coord_perm[j], scale * x[coord_perm[j]]);
  if (r > 0 && worker_perm[worker] < r) {
    const std::uint32_t c = coord_perm[q * n + worker_perm[worker]];
    m.push(c, scale * x[c]);
  }
  detail::sort_entries(m);
  return m;
}

/// C_i(x) = (n/q) * S(x)_{pi_i}, where S lists every coordinate q times
/// followed by r = n - qd zero slots.
inline SparseMessage apply_permk_big_n(std::span<const double> x, std::size_t n,
                                       std::size_t worker, const Permutation& worker_perm) {
  const std::size_t d = x.size();
  const std::size_t q = n / d;
  CCLAB_REQUIRE(worker_perm.size() == n, "permk (n >= d): worker permutation has wrong length");
  SparseMessage m = SparseMessage::zero(d);
  const std::size_t slot = worker_perm[worker];
  if (slot < q * d) {
    const auto c = static_cast<std::uint32_t>(slot / q);
    m.push(c, static_cast<double>(n) / static_cast<double>(q) * x[c]);
  }
  return m;
}

/// Worker i applies operator worker_perm[i]: operators (n/q) Diag(P_j) for
/// block j repeated q times, followed by n - mq zero operators.
inline SparseMessage apply_block_perm(std::span<const double> x, const Partition& partition,
                                      std::size_t n, std::size_t worker,
                                      const Permutation& worker_perm) {
  const std::size_t m_blocks = partition.size();
  const std::size_t q = n / m_blocks;
  CCLAB_REQUIRE(worker_perm.size() == n, "block perm: worker permutation has wrong length");
  SparseMessage m = SparseMessage::zero(x.size());
  const std::size_t op = worker_perm[worker];
  if (op < m_blocks * q) {
    const double scale = static_cast<double>(n) / static_cast<double>(q);
    const auto& block = partition[op / q];
    m.entries.reserve(block.size());
    for (std::uint32_t j : block) m.push(j, scale * x[j]);
    detail::sort_entries(m);
  }
  return m;
}

/// Keeps the given coordinates scaled by d/k.
inline SparseMessage apply_randk(std::span<const double> x,
                                 std::span<const std::uint32_t> subset) {
  const double scale = static_cast<double>(x.size()) / static_cast<double>(subset.size());
  SparseMessage m = SparseMessage::zero(x.size());
  m.entries.reserve(subset.size());
  for (std::uint32_t j : subset) m.push(j, scale * x[j]);
  return m;
}

/// Keeps the k largest-magnitude coordinates unscaled; ties go to the lower
/// index. Entries are emitted in ascending index order.
inline SparseMessage topk(std::span<const double> x, std::size_t k) {
  const std::size_t d = x.size();
  CCLAB_REQUIRE(k >= 1 && k <= d, "topk: requires 1 <= k <= d");
  std::vector<std::uint32_t> order(d);
  std::iota(order.begin(), order.end(), 0U);
  auto before = [&](std::uint32_t a, std::uint32_t b) {
    const double fa = std::fabs(x[a]);
    const double fb = std::fabs(x[b]);
    return fa > fb || (fa == fb && a < b);
  };
  if (k < d) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     order.end(), before);
    // nth_element leaves the first k as the top set (strict weak order with
    // index tie-break makes it unique).
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  SparseMessage m = SparseMessage::zero(d);
  m.entries.reserve(k);
  for (std::uint32_t j : order) m.push(j, x[j]);
  return m;
}

/// Unbiased stochastic rounding of v to {sign * 2^e}: with 2^e <= |v| < 2^(e+1)
/// the result is 2^(e+1) with probability (|v| - 2^e) / 2^e, else 2^e.
inline double round_to_power_of_two(double v, KeyedStream& stream) {
  const double u = stream.uniform();
  if (v == 0.0 || !std::isfinite(v)) return v;
  int e = 0;
  const double mant = std::frexp(std::fabs(v), &e);  // |v| = mant * 2^e, mant in [0.5, 1)
  const double lo = std::ldexp(0.5, e);
  if (mant == 0.5) return v;
  const double p_up = (std::fabs(v) - lo) / lo;
  const double mag = u < p_up ? 2.0 * lo : lo;
  return std::signbit(v) ? -mag : mag;
}

inline Vector quantize(std::span<const double> x, QuantizerKind kind, KeyedStream& stream) {
  Vector out(x.begin(), x.end());
  if (kind == QuantizerKind::kNone) return out;
  for (double& v : out) v = round_to_power_of_two(v, stream);
  return out;
}

// -----------------------------------------------------------------------------
// Round draws and context-driven application

/// Samples the randomness shared by all workers in (master_seed, round).
inline Draw draw_shared(const CompressorSpec& spec, std::size_t n, std::size_t d,
                        std::uint64_t master_seed, std::uint64_t round) {
  Draw draw;
  switch (spec.kind) {
    case CompressorKind::kPermKBigD: {
      auto s = KeyedStream::shared(master_seed, StreamTag::kCoordinatePermutation, round);
      draw.coord_perm = sample_permutation(d, s);
      if (d % n != 0) {
        auto w = KeyedStream::shared(master_seed, StreamTag::kWorkerPermutation, round);
        draw.worker_perm = sample_permutation(n, w);
      }
      break;
    }
    case CompressorKind::kPermKBigN:
    case CompressorKind::kBlockPerm: {
      auto w = KeyedStream::shared(master_seed, StreamTag::kWorkerPermutation, round);
      draw.worker_perm = sample_permutation(n, w);
      break;
    }
    case CompressorKind::kRandK:
      if (spec.shared) {
        auto s = KeyedStream::shared(master_seed, StreamTag::kRandK, round);
        draw.shared_subset = sample_subset(d, spec.k, s);
      }
      break;
    case CompressorKind::kComposed:
      if (spec.inner) return draw_shared(*spec.inner, n, d, master_seed, round);
      break;
    default: break;
  }
  return draw;
}

/// Applies `spec` to one worker's input using a precomputed shared draw.
inline SparseMessage compress(const CompressorSpec& spec, std::span<const double> x,
                              const RoundContext& ctx, const Draw& draw) {
  detail::check_input(x, ctx);
  switch (spec.kind) {
    case CompressorKind::kIdentity: return SparseMessage::dense(x);
    case CompressorKind::kPermKBigD:
      return apply_permk_big_d(x, ctx.n, ctx.worker_id, draw.coord_perm, draw.worker_perm);
    case CompressorKind::kPermKBigN:
      return apply_permk_big_n(x, ctx.n, ctx.worker_id, draw.worker_perm);
    case CompressorKind::kBlockPerm:
      return apply_block_perm(x, spec.partition, ctx.n, ctx.worker_id, draw.worker_perm);
    case CompressorKind::kRandK: {
      if (!draw.worker_subsets.empty()) return apply_randk(x, draw.worker_subsets.at(ctx.worker_id));
      if (spec.shared) return apply_randk(x, draw.shared_subset);
      auto s = KeyedStream::private_to(ctx.master_seed, StreamTag::kRandK, ctx.round,
                                       ctx.worker_id);
      const auto subset = sample_subset(ctx.d, spec.k, s);
      return apply_randk(x, subset);
    }
    case CompressorKind::kTopK: return topk(x, spec.k);
    case CompressorKind::kComposed: {
      auto s = KeyedStream::private_to(ctx.master_seed, StreamTag::kQuantizer, ctx.round,
                                       ctx.worker_id);
      const Vector qx = quantize(x, spec.quantizer, s);
      return compress(*spec.inner, qx, ctx, draw);
    }
  }
  throw Unsupported("compress: unknown compressor kind");
}

/// Applies `spec`, regenerating the shared draw from ctx. Pure in (x, ctx).
inline SparseMessage compress(const CompressorSpec& spec, std::span<const double> x,
                              const RoundContext& ctx) {
  validate(spec, ctx.n, ctx.d);
  return compress(spec, x, ctx, draw_shared(spec, ctx.n, ctx.d, ctx.master_seed, ctx.round));
}

inline SparseMessage permk_big_d(std::span<const double> x, const RoundContext& ctx) {
  validate(CompressorSpec::permk_big_d(), ctx.n, ctx.d);
  return compress(CompressorSpec::permk_big_d(), x, ctx);
}

inline SparseMessage permk_big_n(std::span<const double> x, const RoundContext& ctx) {
  validate(CompressorSpec::permk_big_n(), ctx.n, ctx.d);
  return compress(CompressorSpec::permk_big_n(), x, ctx);
}

inline SparseMessage randk(std::span<const double> x, std::size_t k, const RoundContext& ctx,
                           bool shared) {
  return compress(CompressorSpec::randk(k, shared), x, ctx);
}

inline SparseMessage block_perm(std::span<const double> x, const CompressorSpec& spec,
                                const RoundContext& ctx) {
  CCLAB_REQUIRE(spec.kind == CompressorKind::kBlockPerm, "block_perm: spec is not a block permutation");
  return compress(spec, x, ctx);
}

inline SparseMessage compose_quantize(const CompressorSpec& inner, QuantizerKind quantizer,
                                      std::span<const double> x, const RoundContext& ctx) {
  return compress(CompressorSpec::composed(inner, quantizer), x, ctx);
}

// -----------------------------------------------------------------------------
// Closed-form constants

namespace detail {

/// 1 - n(q-1)/((n-1)q): the IV constant of the multiset / block constructions.
inline double replicated_iv_constant(std::size_t n, std::size_t q) {
  if (q <= 1 || n <= 1) return 1.0;
  const double nn = static_cast<double>(n);
  const double qq = static_cast<double>(q);
  return 1.0 - nn * (qq - 1.0) / ((nn - 1.0) * qq);
}

}  // namespace detail

inline ABConstants ab_constants(const CompressorSpec& spec, std::size_t n, std::size_t d) {
  validate(spec, n, d);
  ABConstants c;
  switch (spec.kind) {
    case CompressorKind::kIdentity:
      c.omega = 0.0;
      break;
    case CompressorKind::kPermKBigD:
      c.A = c.B = 1.0;
      c.approximate = d % n != 0;
      break;
    case CompressorKind::kPermKBigN:
      c.A = c.B = detail::replicated_iv_constant(n, n / d);
      c.approximate = n % d != 0;
      break;
    case CompressorKind::kRandK: {
      const double omega = static_cast<double>(d) / static_cast<double>(spec.k) - 1.0;
      c.omega = omega;
      c.A = spec.shared ? omega : omega / static_cast<double>(n);
      c.B = 0.0;
      break;
    }
    case CompressorKind::kBlockPerm:
      c.A = c.B = detail::replicated_iv_constant(n, n / spec.partition.size());
      break;
    case CompressorKind::kComposed: {
      const ABConstants inner = ab_constants(*spec.inner, n, d);
      const double wq = quantizer_omega(spec.quantizer);
      c.A = (wq + 1.0) * inner.A;
      c.B = inner.B;
      if (inner.omega) c.omega = (wq + 1.0) * (*inner.omega + 1.0) - 1.0;
      c.approximate = inner.approximate;
      break;
    }
    case CompressorKind::kTopK:
      throw Unsupported("ab_constants: TopK is biased and has no AB constants");
  }
  return c;
}

/// Contraction factor alpha of E|C(x) - x|^2 <= (1 - alpha)|x|^2.
inline double contraction_alpha(const CompressorSpec& spec, std::size_t d) {
  switch (spec.kind) {
    case CompressorKind::kIdentity: return 1.0;
    case CompressorKind::kTopK:
      CCLAB_REQUIRE(spec.k >= 1 && spec.k <= d, "topk: requires 1 <= k <= d");
      return static_cast<double>(spec.k) / static_cast<double>(d);
    default:
      throw Unsupported("contraction_alpha: only TopK and identity are contractive here");
  }
}

/// Extra index bits for a message of `payload` coordinates. Shared-seed
/// sparsifiers cost nothing: receivers regenerate the indices.
inline std::uint64_t index_bits(const CompressorSpec& spec, std::size_t d, std::size_t payload,
                                bool count_topk_indices) {
  const CompressorSpec& base =
      spec.kind == CompressorKind::kComposed && spec.inner ? *spec.inner : spec;
  if (!count_topk_indices || base.kind != CompressorKind::kTopK || d <= 1) return 0;
  std::uint64_t bits = 0;
  while ((std::uint64_t{1} << bits) < d) ++bits;
  return bits * payload;
}

}  // namespace cclab

#endif  // CCLAB_COMPRESSORS_COMPRESSORS_HPP
