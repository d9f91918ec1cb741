#pragma once

// Chunk-level inverted index with TF-IDF relevance.
//
//   R(q, x)  = sum_t tf(q_t, x) * idf(q_t)
//   R(Q, X)  = sum_{q in Q} sum_{x in X} R(q, x)
//   idf(w)   = ln((1 + N) / (1 + df(w))) + 1
//
// Every query position contributes, so a codeword repeated in the query is
// counted once per occurrence.
//
// VPNI layout, little-endian:
//   "VPNI" u32 version, u8 modality, u64 total_chunks, u32 K, f64 aw_stride_s
//   section chunk_table (u64 byte length), ascending chunk_id:
//     u64 chunk_id, string video_id, u32 chunk_index, f64 start_s,
//     u32 valid_len, u32 n, u32[n] codewords
//   section postings (u64 byte length):
//     u32 nonempty_codewords, then ascending codeword:
//       u32 codeword, u32 count, count x (u64 chunk_id, u32 tf) ascending chunk_id

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vpn/chunk.hpp"
#include "vpn/detail/binary_io.hpp"
#include "vpn/features.hpp"

namespace vpn {

enum class Weighting {
  tfidf,
  tf_only,  ///< idf fixed at 1: plain codeword histogram counts
};

struct Posting {
  std::uint64_t chunk_id;
  std::uint32_t tf;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct ScoredVideo {
  std::string video_id;
  double score = 0;

  friend bool operator==(const ScoredVideo&, const ScoredVideo&) = default;
};

/// Orders by score descending, then video id ascending.
inline bool ranks_before(const ScoredVideo& a, const ScoredVideo& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.video_id < b.video_id;
}

class InvertedIndex {
 public:
  InvertedIndex() = default;

  static InvertedIndex build(std::vector<Chunk> chunks, std::uint32_t k, Modality modality = Modality::visual,
                             double aw_stride_s = kDefaultAwStride) {
    require(k >= 1, ErrorCode::parameter, "vocabulary size must be positive");
    InvertedIndex idx;
    idx.modality_ = modality;
    idx.k_ = k;
    idx.aw_stride_s_ = aw_stride_s;
    for (auto& c : chunks) {
      for (Codeword w : c.codewords)
        require(w < k, ErrorCode::parameter, "codeword id out of vocabulary");
      require(c.valid_len <= c.codewords.size(), ErrorCode::integrity, "valid_len exceeds chunk length");
      const auto id = c.chunk_id;
      require(idx.chunks_.emplace(id, std::move(c)).second, ErrorCode::integrity,
              "duplicate chunk id " + std::to_string(id));
    }
    idx.rebuild_postings();
    return idx;
  }

  Modality modality() const noexcept { return modality_; }
  std::uint32_t vocabulary_size() const noexcept { return k_; }
  double aw_stride_s() const noexcept { return aw_stride_s_; }
  std::uint64_t total_chunks() const noexcept { return chunks_.size(); }
  const std::map<std::uint64_t, Chunk>& chunk_table() const noexcept { return chunks_; }
  std::span<const Posting> postings(Codeword w) const {
    return w < postings_.size() ? std::span<const Posting>(postings_[w]) : std::span<const Posting>();
  }
  std::uint32_t doc_freq(Codeword w) const { return w < doc_freq_.size() ? doc_freq_[w] : 0; }
  const std::vector<std::string>& videos() const noexcept { return videos_; }
  bool has_video(const std::string& id) const { return video_index_.contains(id); }

  /// Chunks of one video ordered by chunk_index.
  std::vector<const Chunk*> chunks_of(const std::string& video_id) const {
    const auto it = video_index_.find(video_id);
    if (it == video_index_.end()) fail(ErrorCode::lookup, "unknown video " + video_id);
    std::vector<const Chunk*> out;
    for (auto id : video_chunks_[it->second]) out.push_back(&chunks_.at(id));
    return out;
  }

  double idf(Codeword w) const {
    const double n = static_cast<double>(total_chunks());
    return std::log((1.0 + n) / (1.0 + doc_freq(w))) + 1.0;
  }

  double weight(Codeword w, Weighting mode) const { return mode == Weighting::tfidf ? idf(w) : 1.0; }

  /// Definitional chunk relevance, computed by scanning the chunk itself.
  double relevance_chunk(std::span<const Codeword> query, std::uint64_t chunk_id,
                         Weighting mode = Weighting::tfidf) const {
    const auto it = chunks_.find(chunk_id);
    if (it == chunks_.end()) fail(ErrorCode::lookup, "unknown chunk " + std::to_string(chunk_id));
    const auto& cw = it->second.codewords;
    double score = 0;
    for (Codeword q : query) {
      const auto tf = std::count(cw.begin(), cw.end(), q);
      if (tf) score += static_cast<double>(tf) * weight(q, mode);
    }
    return score;
  }

  double relevance_video(const std::vector<CodewordSeq>& query_chunks, const std::string& video_id,
                         Weighting mode = Weighting::tfidf) const {
    double score = 0;
    const auto chunks = chunks_of(video_id);
    for (const auto& q : query_chunks)
      for (const Chunk* c : chunks) score += relevance_chunk(q, c->chunk_id, mode);
    return score;
  }

  /// Scores every video through the postings lists. Videos sharing nothing
  /// with the query score 0 and still take part in the ranking.
  ///
  /// Matches are counted exactly per weight class (codewords with equal
  /// document frequency) and each class is weighted once, so videos with
  /// equal true scores get bit-identical scores and fall to the id tie-break.
  std::vector<ScoredVideo> score_all(const std::vector<CodewordSeq>& query_chunks,
                                     Weighting mode = Weighting::tfidf) const {
    bool any = false;
    for (const auto& q : query_chunks) any = any || !q.empty();
    require(any, ErrorCode::empty_query, "query has no codewords");
    std::map<Codeword, std::uint64_t> query_counts;
    for (const auto& q : query_chunks)
      for (Codeword w : q)
        if (w < postings_.size()) ++query_counts[w];
    std::map<std::uint32_t, std::vector<std::pair<Codeword, std::uint64_t>>> classes;
    for (const auto& [w, n] : query_counts) classes[mode == Weighting::tfidf ? doc_freq(w) : 0].emplace_back(w, n);

    std::vector<double> acc(videos_.size(), 0.0);
    std::vector<std::uint64_t> matches(videos_.size(), 0);
    std::vector<std::size_t> touched;
    for (const auto& [df, members] : classes) {
      for (const auto& [w, n] : members)
        for (const auto& p : postings_[w]) {
          const auto v = chunk_video_.at(p.chunk_id);
          if (matches[v] == 0) touched.push_back(v);
          matches[v] += n * p.tf;
        }
      const double wt = weight(members.front().first, mode);
      for (auto v : touched) {
        acc[v] += static_cast<double>(matches[v]) * wt;
        matches[v] = 0;
      }
      touched.clear();
    }
    std::vector<ScoredVideo> out;
    out.reserve(videos_.size());
    for (std::size_t v = 0; v < videos_.size(); ++v) out.push_back({videos_[v], acc[v]});
    return out;
  }

  std::vector<ScoredVideo> query_topk(const std::vector<CodewordSeq>& query_chunks, std::size_t k,
                                      Weighting mode = Weighting::tfidf) const {
    require(k >= 1, ErrorCode::parameter, "k must be >= 1");
    auto all = score_all(query_chunks, mode);
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), ranks_before);
    all.resize(keep);
    return all;
  }

  static constexpr std::uint32_t kVersion = 1;

  std::vector<char> serialize() const {
    detail::ByteWriter w;
    w.put_bytes("VPNI");
    w.put(kVersion);
    w.put(static_cast<std::uint8_t>(modality_));
    w.put(static_cast<std::uint64_t>(chunks_.size()));
    w.put(k_);
    w.put(aw_stride_s_);
    detail::ByteWriter table;
    for (const auto& [id, c] : chunks_) {
      table.put(id);
      table.put_string(c.video_id);
      table.put(c.chunk_index);
      table.put(c.start_s);
      table.put(c.valid_len);
      table.put(static_cast<std::uint32_t>(c.codewords.size()));
      table.put_span<Codeword>(c.codewords);
    }
    w.put_section(table);
    detail::ByteWriter post;
    std::uint32_t nonempty = 0;
    for (const auto& p : postings_) nonempty += p.empty() ? 0 : 1;
    post.put(nonempty);
    for (std::uint32_t cw = 0; cw < postings_.size(); ++cw) {
      if (postings_[cw].empty()) continue;
      post.put(cw);
      post.put(static_cast<std::uint32_t>(postings_[cw].size()));
      for (const auto& p : postings_[cw]) {
        post.put(p.chunk_id);
        post.put(p.tf);
      }
    }
    w.put_section(post);
    return w.bytes();
  }

  void save(const std::filesystem::path& path) const {
    detail::ByteWriter w;
    const auto bytes = serialize();
    w.put_bytes(std::string_view(bytes.data(), bytes.size()));
    w.write_file(path);
  }

  static InvertedIndex deserialize(std::vector<char> bytes) { return read(detail::ByteReader(std::move(bytes))); }

  static InvertedIndex load(const std::filesystem::path& path) { return read(detail::ByteReader::from_file(path)); }

 private:
  static InvertedIndex read(detail::ByteReader r) {
    r.expect_magic("VPNI", kVersion);
    InvertedIndex idx;
    const auto mod = r.get<std::uint8_t>();
    if (mod > 2) fail(ErrorCode::format, "unknown modality tag");
    idx.modality_ = static_cast<Modality>(mod);
    const auto total = r.get<std::uint64_t>();
    idx.k_ = r.get<std::uint32_t>();
    idx.aw_stride_s_ = r.get<double>();
    if (idx.k_ == 0 || !(idx.aw_stride_s_ > 0)) fail(ErrorCode::corruption, "bad index header");

    auto table = r.get_section();
    for (std::uint64_t i = 0; i < total; ++i) {
      Chunk c;
      c.chunk_id = table.get<std::uint64_t>();
      c.video_id = table.get_string();
      c.chunk_index = table.get<std::uint32_t>();
      c.start_s = table.get<double>();
      c.valid_len = table.get<std::uint32_t>();
      const auto n = table.get<std::uint32_t>();
      if (std::uint64_t{n} * sizeof(Codeword) > table.remaining()) fail(ErrorCode::corruption, "chunk length field");
      c.codewords.resize(n);
      table.get_into<Codeword>(c.codewords);
      if (c.valid_len > n) fail(ErrorCode::corruption, "valid_len exceeds chunk length");
      for (Codeword w : c.codewords)
        if (w >= idx.k_) fail(ErrorCode::corruption, "codeword out of vocabulary");
      const auto id = c.chunk_id;
      if (!idx.chunks_.emplace(id, std::move(c)).second) fail(ErrorCode::corruption, "duplicate chunk id");
    }
    table.expect_done("chunk table");

    auto post = r.get_section();
    std::vector<std::vector<Posting>> stored(idx.k_);
    const auto nonempty = post.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < nonempty; ++i) {
      const auto cw = post.get<std::uint32_t>();
      const auto count = post.get<std::uint32_t>();
      if (cw >= idx.k_) fail(ErrorCode::corruption, "posting codeword out of vocabulary");
      if (std::uint64_t{count} * 12 > post.remaining()) fail(ErrorCode::corruption, "posting length field");
      for (std::uint32_t j = 0; j < count; ++j) {
        const auto chunk_id = post.get<std::uint64_t>();
        const auto tf = post.get<std::uint32_t>();
        stored[cw].push_back({chunk_id, tf});
      }
    }
    post.expect_done("postings");
    r.expect_done("index");

    // Postings are redundant with the chunk table; they must agree exactly.
    idx.rebuild_postings();
    if (stored != idx.postings_) fail(ErrorCode::corruption, "postings disagree with chunk table");
    return idx;
  }

  void rebuild_postings() {
    postings_.assign(k_, {});
    doc_freq_.assign(k_, 0);
    videos_.clear();
    video_index_.clear();
    video_chunks_.clear();
    chunk_video_.clear();
    for (const auto& [id, c] : chunks_) {
      std::map<Codeword, std::uint32_t> tf;
      for (Codeword w : c.codewords) ++tf[w];
      for (const auto& [w, n] : tf) {
        postings_[w].push_back({id, n});
        ++doc_freq_[w];
      }
      videos_.push_back(c.video_id);
    }
    std::sort(videos_.begin(), videos_.end());
    videos_.erase(std::unique(videos_.begin(), videos_.end()), videos_.end());
    for (std::size_t v = 0; v < videos_.size(); ++v) video_index_[videos_[v]] = v;
    video_chunks_.resize(videos_.size());
    for (const auto& [id, c] : chunks_) {
      const auto v = video_index_.at(c.video_id);
      video_chunks_[v].push_back(id);
      chunk_video_[id] = v;
    }
    for (auto& ids : video_chunks_)
      std::sort(ids.begin(), ids.end(), [&](std::uint64_t a, std::uint64_t b) {
        return chunks_.at(a).chunk_index < chunks_.at(b).chunk_index;
      });
  }

  Modality modality_ = Modality::visual;
  std::uint32_t k_ = 0;
  double aw_stride_s_ = kDefaultAwStride;
  std::map<std::uint64_t, Chunk> chunks_;
  std::vector<std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_freq_;
  std::vector<std::string> videos_;
  std::unordered_map<std::string, std::size_t> video_index_;
  std::vector<std::vector<std::uint64_t>> video_chunks_;
  std::unordered_map<std::uint64_t, std::size_t> chunk_video_;
};

}  // namespace vpn
