#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vpn/error.hpp"

namespace vpn {

using Codeword = std::uint32_t;
using CodewordSeq = std::vector<Codeword>;

/// Chunking geometry shared by database and query videos.
struct ChunkParams {
  double chunk_len_s = 10.0;    ///< l
  double chunk_stride_s = 5.0;  ///< s_c, defaults to l / 2
  double aw_stride_s = 0.5;     ///< s_f

  /// Codewords per chunk after padding, ceil(l / s_f).
  std::size_t codewords_per_chunk() const {
    return static_cast<std::size_t>(std::ceil(chunk_len_s / aw_stride_s - 1e-9));
  }
  /// AW positions between consecutive chunk starts.
  std::size_t aw_per_stride() const {
    return static_cast<std::size_t>(std::llround(chunk_stride_s / aw_stride_s));
  }

  friend bool operator==(const ChunkParams&, const ChunkParams&) = default;
};

inline void check(const ChunkParams& p) {
  require(std::isfinite(p.chunk_len_s) && p.chunk_len_s > 0, ErrorCode::parameter, "chunk length must be positive");
  require(std::isfinite(p.chunk_stride_s) && p.chunk_stride_s > 0 && p.chunk_stride_s <= p.chunk_len_s + 1e-9,
          ErrorCode::parameter, "chunk stride must be in (0, l]");
  require(std::isfinite(p.aw_stride_s) && p.aw_stride_s > 0, ErrorCode::parameter, "AW stride must be positive");
}

struct Chunk {
  std::uint64_t chunk_id = 0;
  std::string video_id;
  std::uint32_t chunk_index = 0;
  double start_s = 0;
  CodewordSeq codewords;       ///< padded to ceil(l / s_f)
  std::uint32_t valid_len = 0;  ///< entries before tail padding

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Renumbers chunk ids consecutively from `first_id`; returns the next free id.
inline std::uint64_t assign_chunk_ids(std::vector<Chunk>& chunks, std::uint64_t first_id) {
  for (auto& c : chunks) c.chunk_id = first_id++;
  return first_id;
}

/// Unpadded codeword sequences of a query's chunks.
inline std::vector<CodewordSeq> query_chunk_sequences(const std::vector<Chunk>& chunks) {
  std::vector<CodewordSeq> out;
  for (const auto& c : chunks)
    if (c.valid_len > 0) out.emplace_back(c.codewords.begin(), c.codewords.begin() + c.valid_len);
  return out;
}

}  // namespace vpn
