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

// IDX container (the MNIST file format): a big-endian header
//   magic (0x00000800 | ndims, element type 0x08 = unsigned byte),
//   ndims big-endian uint32 sizes,
// followed by the row-major payload.

#ifndef CCLAB_PROBLEMS_IDX_HPP
#define CCLAB_PROBLEMS_IDX_HPP

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cclab/core/error.hpp"

namespace cclab {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxTensor {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::size_t count() const { return dims.empty() ? 0 : dims.front(); }

  /// Elements per item (rows * cols for images, 1 for labels).
  std::size_t item_size() const {
    std::size_t s = 1;
    for (std::size_t k = 1; k < dims.size(); ++k) s *= dims[k];
    return s;
  }
};

namespace detail {

inline std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t at) {
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace detail

/// Parses an unsigned-byte IDX buffer. If expected_magic is nonzero the
/// magic must match it exactly.
inline IdxTensor parse_idx(std::span<const std::uint8_t> bytes, std::uint32_t expected_magic = 0) {
  if (bytes.size() < 4) throw FormatError("idx: truncated header");
  IdxTensor t;
  t.magic = detail::read_be32(bytes, 0);
  if (t.magic != kIdxImagesMagic && t.magic != kIdxLabelsMagic)
    throw FormatError("idx: bad magic");
  if (expected_magic != 0 && t.magic != expected_magic) throw FormatError("idx: bad magic");
  const std::size_t ndims = t.magic & 0xFFU;
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) throw FormatError("idx: truncated header");
  std::size_t total = 1;
  for (std::size_t k = 0; k < ndims; ++k) {
    const std::uint32_t dim = detail::read_be32(bytes, 4 + 4 * k);
    t.dims.push_back(dim);
    if (dim != 0 && total > std::numeric_limits<std::size_t>::max() / dim)
      throw FormatError("idx: dimension overflow");
    total *= dim;
  }
  if (bytes.size() - header < total) throw FormatError("idx: truncated payload");
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                bytes.begin() + static_cast<std::ptrdiff_t>(header + total));
  return t;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline IdxTensor load_idx(const std::string& path, std::uint32_t expected_magic = 0) {
  return parse_idx(read_file_bytes(path), expected_magic);
}

inline IdxTensor load_idx_images(const std::string& path) { return load_idx(path, kIdxImagesMagic); }
inline IdxTensor load_idx_labels(const std::string& path) { return load_idx(path, kIdxLabelsMagic); }

inline std::vector<std::uint8_t> encode_idx(std::uint32_t magic, const std::vector<std::uint32_t>& dims,
                                            std::span<const std::uint8_t> data) {
  CCLAB_REQUIRE((magic & 0xFFU) == dims.size(), "encode_idx: magic does not match rank");
  std::vector<std::uint8_t> out;
  detail::write_be32(out, magic);
  for (std::uint32_t d : dims) detail::write_be32(out, d);
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

}  // namespace cclab

#endif  // CCLAB_PROBLEMS_IDX_HPP
