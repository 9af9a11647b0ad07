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

// Counter-based keyed random streams.
//
// A stream is identified by a key derived from (master seed, purpose tag,
// round[, worker]). The i-th draw is mix64(key + i * golden), so any party
// holding the same key regenerates the same values in any order and without
// shared mutable state. Only integer arithmetic is used for integer draws, so
// sequences are identical across platforms and standard libraries.

#ifndef CCLAB_CORE_RNG_HPP
#define CCLAB_CORE_RNG_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <numeric>
#include <utility>
#include <vector>

namespace cclab {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Purpose tags keep streams for different random objects disjoint even when
/// they share (seed, round, worker).
enum class StreamTag : std::uint64_t {
  kCoordinatePermutation = 1,
  kWorkerPermutation = 2,
  kSyncCoin = 3,
  kRandK = 4,
  kQuantizer = 5,
  kOutputChoice = 6,
  kTaskGenerator = 7,
  kDataSplit = 8,
  kInitialPoint = 9,
  kPairSampling = 10,
  kSyntheticData = 11,
  kUser = 100,
};

constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t v : parts) h = mix64(h ^ (v + kGolden + (h << 6) + (h >> 2)));
  return h;
}

class KeyedStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr KeyedStream(std::uint64_t key) noexcept : key_(key) {}

  /// Stream shared by every worker in a round.
  static constexpr KeyedStream shared(std::uint64_t master_seed, StreamTag tag,
                                      std::uint64_t round) noexcept {
    return KeyedStream(derive_key({master_seed, static_cast<std::uint64_t>(tag), round}));
  }

  /// Stream private to one worker in a round.
  static constexpr KeyedStream private_to(std::uint64_t master_seed, StreamTag tag,
                                          std::uint64_t round, std::uint64_t worker) noexcept {
    return KeyedStream(derive_key(
        {master_seed, static_cast<std::uint64_t>(tag), round, worker + 1, 0x5EEDULL}));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return next_u64(); }

  constexpr std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Uniform permutation of {0..len-1} by the Fisher-Yates shuffle, O(len).
inline std::vector<std::uint32_t> fisher_yates(std::size_t len, KeyedStream& stream) {
  std::vector<std::uint32_t> p(len);
  std::iota(p.begin(), p.end(), 0U);
  for (std::size_t i = len; i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.below(i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace cclab

#endif  // CCLAB_CORE_RNG_HPP
