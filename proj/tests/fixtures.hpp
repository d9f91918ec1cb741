#pragma once

// Random toy corpora of chunked codeword sequences.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vpn/chunk.hpp"
#include "vpn/media.hpp"

namespace vpn::test {

struct ToyCorpus {
  std::vector<Chunk> chunks;
  std::vector<oracle::ToyChunk> plain;
  std::uint32_t k = 0;
};

inline std::string toy_id(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%04d", v);
  return buf;
}

/// `videos` videos of 1..max_chunks chunks, each of `len` codewords drawn from [0, k).
inline ToyCorpus toy_corpus(std::uint64_t seed, int videos, int max_chunks, std::uint32_t k, std::size_t len = 6) {
  Rng rng(seed);
  ToyCorpus c;
  c.k = k;
  std::uint64_t id = 0;
  for (int v = 0; v < videos; ++v) {
    const int n = uniform_int(rng, 1, max_chunks);
    for (int i = 0; i < n; ++i) {
      Chunk ch;
      ch.chunk_id = id++;
      ch.video_id = toy_id(v);
      ch.chunk_index = static_cast<std::uint32_t>(i);
      ch.start_s = 5.0 * i;
      for (std::size_t j = 0; j < len; ++j)
        ch.codewords.push_back(static_cast<Codeword>(uniform_int(rng, 0, static_cast<int>(k) - 1)));
      ch.valid_len = static_cast<std::uint32_t>(len);
      c.plain.push_back({ch.video_id, ch.codewords});
      c.chunks.push_back(std::move(ch));
    }
  }
  return c;
}

inline std::vector<CodewordSeq> toy_query(std::uint64_t seed, std::uint32_t k, int chunks = 2, std::size_t len = 5) {
  Rng rng(seed);
  std::vector<CodewordSeq> q(static_cast<std::size_t>(chunks));
  for (auto& s : q)
    for (std::size_t j = 0; j < len; ++j) s.push_back(static_cast<Codeword>(uniform_int(rng, 0, static_cast<int>(k) - 1)));
  return q;
}

}  // namespace vpn::test
