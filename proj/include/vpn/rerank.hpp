#pragma once

// Sequence-aware re-ranking and temporal localization over codeword
// sequences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpn/chunk.hpp"
#include "vpn/inverted_index.hpp"

namespace vpn {

/// Unit-cost edit distance, two-row DP over the shorter sequence.
inline std::size_t levenshtein(std::span<const Codeword> a, std::span<const Codeword> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Rebuilds a video's AW codeword sequence from its overlapping chunks.
/// Each AW position appears once; tail padding is dropped.
inline CodewordSeq video_sequence(const std::vector<const Chunk*>& chunks, double aw_stride_s) {
  require(aw_stride_s > 0, ErrorCode::parameter, "AW stride must be positive");
  CodewordSeq seq;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const Chunk& c = *chunks[i];
    require(c.video_id == chunks.front()->video_id, ErrorCode::integrity, "chunks span several videos");
    require(c.chunk_index == chunks.front()->chunk_index + i, ErrorCode::integrity,
            "gap in chunk_index for " + c.video_id);
    const auto offset = static_cast<std::size_t>(std::llround(c.start_s / aw_stride_s));
    const std::size_t end = offset + c.valid_len;
    if (c.valid_len == 0 || end <= seq.size()) continue;
    require(offset <= seq.size(), ErrorCode::integrity, "chunks leave uncovered AWs in " + c.video_id);
    seq.insert(seq.end(), c.codewords.begin() + static_cast<std::ptrdiff_t>(seq.size() - offset),
               c.codewords.begin() + c.valid_len);
  }
  return seq;
}

inline CodewordSeq video_sequence(const std::vector<Chunk>& chunks, double aw_stride_s) {
  std::vector<const Chunk*> ptrs;
  for (const auto& c : chunks) ptrs.push_back(&c);
  return video_sequence(ptrs, aw_stride_s);
}

inline CodewordSeq video_sequence(const InvertedIndex& idx, const std::string& video_id) {
  return video_sequence(idx.chunks_of(video_id), idx.aw_stride_s());
}

/// Minimum edit distance between the query and any same-length window of the
/// candidate. A candidate shorter than the query is compared whole.
inline std::size_t window_edit_distance(std::span<const Codeword> query, std::span<const Codeword> candidate) {
  if (candidate.size() <= query.size()) return levenshtein(query, candidate);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t j = 0; j + query.size() <= candidate.size() && best > 0; ++j)
    best = std::min(best, levenshtein(query, candidate.subspan(j, query.size())));
  return best;
}

struct RankedResult {
  std::string video_id;
  double tfidf_score = 0;
  std::size_t edit_distance = 0;
  std::size_t final_rank = 0;

  friend bool operator==(const RankedResult&, const RankedResult&) = default;
};

/// Edit distance ascending, then TF-IDF descending, then video id.
inline bool reranks_before(const RankedResult& a, const RankedResult& b) {
  if (a.edit_distance != b.edit_distance) return a.edit_distance < b.edit_distance;
  if (a.tfidf_score != b.tfidf_score) return a.tfidf_score > b.tfidf_score;
  return a.video_id < b.video_id;
}

inline void assign_ranks(std::vector<RankedResult>& results) {
  std::sort(results.begin(), results.end(), reranks_before);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].final_rank = i + 1;
}

inline std::vector<RankedResult> rerank(const std::vector<ScoredVideo>& shortlist, std::span<const Codeword> query_seq,
                                        const InvertedIndex& idx) {
  std::vector<RankedResult> out;
  out.reserve(shortlist.size());
  for (const auto& s : shortlist) {
    const auto seq = video_sequence(idx, s.video_id);
    out.push_back({s.video_id, s.score, window_edit_distance(query_seq, seq), 0});
  }
  assign_ranks(out);
  return out;
}

struct LocalizationHeatmap {
  std::string candidate_video_id;
  std::size_t query_len = 0;
  std::size_t stride = 1;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> distances;
  std::size_t best_offset = 0;

  nlohmann::json to_json() const {
    return {{"video_id", candidate_video_id}, {"stride", stride},        {"query_len", query_len},
            {"offsets", offsets},             {"distances", distances}, {"best_offset", best_offset}};
  }
};

inline LocalizationHeatmap localize(std::span<const Codeword> query_seq, std::span<const Codeword> candidate_seq,
                                    std::size_t stride_aw = 1, std::string candidate_id = {}) {
  require(stride_aw >= 1, ErrorCode::parameter, "stride must be >= 1");
  require(!query_seq.empty(), ErrorCode::empty_query, "query sequence is empty");
  require(candidate_seq.size() >= query_seq.size(), ErrorCode::length, "query is longer than the candidate");
  LocalizationHeatmap h;
  h.candidate_video_id = std::move(candidate_id);
  h.query_len = query_seq.size();
  h.stride = stride_aw;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t j = 0; j + query_seq.size() <= candidate_seq.size(); j += stride_aw) {
    const auto d = levenshtein(query_seq, candidate_seq.subspan(j, query_seq.size()));
    h.offsets.push_back(j);
    h.distances.push_back(d);
    if (d < best) {
      best = d;
      h.best_offset = j;
    }
  }
  return h;
}

/// Half-open interval of AW positions.
struct AwInterval {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const noexcept { return end <= begin; }
};

/// IoU between the union of query-length windows at offsets whose distance is
/// within `threshold` and the ground-truth interval. Both empty gives 1.
inline double localization_iou(const LocalizationHeatmap& h, double threshold, AwInterval truth) {
  require(std::isfinite(threshold), ErrorCode::parameter, "threshold must be finite");
  std::size_t extent = truth.empty() ? 0 : truth.end;
  for (auto o : h.offsets) extent = std::max(extent, o + h.query_len);
  std::vector<bool> pred(extent, false);
  for (std::size_t i = 0; i < h.offsets.size(); ++i)
    if (static_cast<double>(h.distances[i]) <= threshold)
      std::fill(pred.begin() + static_cast<std::ptrdiff_t>(h.offsets[i]),
                pred.begin() + static_cast<std::ptrdiff_t>(h.offsets[i] + h.query_len), true);
  std::size_t inter = 0, uni = 0;
  for (std::size_t p = 0; p < extent; ++p) {
    const bool t = !truth.empty() && p >= truth.begin && p < truth.end;
    inter += (pred[p] && t) ? 1 : 0;
    uni += (pred[p] || t) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace vpn
