#pragma once

// Audio-visual fusion: early (one codebook over concatenated descriptors),
// late (separate indices, joint scoring and re-ranking) and learned (a linear
// layer over averaged frame embeddings and the audio descriptor).

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpn/features.hpp"
#include "vpn/inverted_index.hpp"
#include "vpn/rerank.hpp"

namespace vpn {

enum class FusionMode { early, late, learned };

inline std::string_view to_string(FusionMode m) {
  switch (m) {
    case FusionMode::early: return "early";
    case FusionMode::late: return "late";
    case FusionMode::learned: return "learned";
  }
  return "?";
}

inline std::optional<FusionMode> fusion_mode_from_string(std::string_view s) {
  for (auto m : {FusionMode::early, FusionMode::late, FusionMode::learned})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

inline constexpr int kLearnedFps = 4;

struct FusionConfig {
  FusionMode mode = FusionMode::late;
  std::optional<RowMatrixF> learned_weights;  ///< E_p, D x 2D
  double visual_weight = 1.0;
  double audio_weight = 1.0;
};

inline void check(const FusionConfig& c) {
  if (c.mode == FusionMode::late)
    require(c.visual_weight >= 0 && c.audio_weight >= 0 && std::isfinite(c.visual_weight) &&
                std::isfinite(c.audio_weight),
            ErrorCode::configuration, "late fusion weights must be finite and non-negative");
  if (c.mode == FusionMode::learned) {
    require(c.learned_weights.has_value(), ErrorCode::configuration, "learned fusion needs E_p weights");
    require(c.learned_weights->rows() == kDefaultDim && c.learned_weights->cols() == 2 * kDefaultDim,
            ErrorCode::shape, "E_p must be 256 x 512");
  }
}

/// Per-AW concatenation [v, a], renormalised to unit length.
inline DescriptorSet early_fuse(const DescriptorSet& v, const DescriptorSet& a) {
  require(v.count() == a.count(), ErrorCode::alignment,
          "visual and audio descriptor counts differ: " + std::to_string(v.count()) + " vs " +
              std::to_string(a.count()));
  require(std::abs(v.aw_stride_s - a.aw_stride_s) < 1e-9 && std::abs(v.t0_s - a.t0_s) < 1e-9,
          ErrorCode::alignment, "visual and audio windows are not aligned");
  DescriptorSet out;
  out.video_id = v.video_id;
  out.modality = Modality::fused;
  out.dim = v.dim + a.dim;
  out.t0_s = v.t0_s;
  out.aw_stride_s = v.aw_stride_s;
  out.aw_len_s = v.aw_len_s;
  out.data.resize(v.count() * static_cast<std::size_t>(out.dim));
  for (std::size_t i = 0; i < v.count(); ++i) {
    auto row = out.row(i);
    std::copy(v.row(i).begin(), v.row(i).end(), row.begin());
    std::copy(a.row(i).begin(), a.row(i).end(), row.begin() + v.dim);
    normalize(row);
  }
  return out;
}

/// [mean of frame embeddings, audio descriptor], the input to E_p.
inline std::vector<float> learned_fusion_input(std::span<const std::vector<float>> frame_embeddings,
                                               std::span<const float> audio) {
  require(!frame_embeddings.empty(), ErrorCode::short_input, "AW holds no frame embeddings");
  const std::size_t d = frame_embeddings.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& e : frame_embeddings) {
    require(e.size() == d, ErrorCode::shape, "frame embedding dimensions differ");
    for (std::size_t i = 0; i < d; ++i) mean[i] += e[i];
  }
  std::vector<float> x(d + audio.size());
  for (std::size_t i = 0; i < d; ++i) x[i] = static_cast<float>(mean[i] / static_cast<double>(frame_embeddings.size()));
  std::copy(audio.begin(), audio.end(), x.begin() + static_cast<std::ptrdiff_t>(d));
  return x;
}

inline std::vector<float> learned_fuse(std::span<const std::vector<float>> frame_embeddings,
                                       std::span<const float> audio, const std::optional<RowMatrixF>& weights) {
  require(weights.has_value(), ErrorCode::configuration, "learned fusion needs E_p weights");
  const auto x = learned_fusion_input(frame_embeddings, audio);
  require(static_cast<Eigen::Index>(x.size()) == weights->cols(), ErrorCode::shape,
          "E_p columns must equal frame plus audio dimension");
  return detail::apply_learned(*weights, x);
}

/// Fusion inputs per AW: frames sampled at 4 fps (four per window) averaged
/// and paired with the audio descriptor of the same window. The AW count is
/// the smaller of the two streams.
inline std::vector<std::vector<float>> learned_fusion_inputs(const VideoAsset& asset, const DescriptorSet& audio,
                                                             const EncoderSpec& visual_enc = EncoderSpec::visual()) {
  const auto frames = frame_embeddings(asset, visual_enc, kLearnedFps);
  const std::size_t n = std::min(audio.count(), aw_count(asset.duration_s(), audio.aw_stride_s));
  std::vector<std::vector<float>> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto first = static_cast<std::size_t>(std::llround(static_cast<double>(j) * audio.aw_stride_s * kLearnedFps));
    const std::size_t last = std::min(frames.size(), first + kLearnedFps);
    require(first < last, ErrorCode::short_input, "AW has no frames at 4 fps");
    out.push_back(learned_fusion_input(std::span(frames).subspan(first, last - first), audio.row(j)));
  }
  return out;
}

inline DescriptorSet learned_fuse_descriptors(const VideoAsset& asset, const DescriptorSet& audio,
                                              const std::optional<RowMatrixF>& weights,
                                              const EncoderSpec& visual_enc = EncoderSpec::visual()) {
  require(weights.has_value(), ErrorCode::configuration, "learned fusion needs E_p weights");
  DescriptorSet out;
  out.video_id = asset.id;
  out.modality = Modality::fused;
  out.dim = static_cast<int>(weights->rows());
  out.aw_stride_s = audio.aw_stride_s;
  for (const auto& x : learned_fusion_inputs(asset, audio, visual_enc)) {
    require(static_cast<Eigen::Index>(x.size()) == weights->cols(), ErrorCode::shape,
            "E_p columns must equal frame plus audio dimension");
    const auto z = detail::apply_learned(*weights, x);
    out.data.insert(out.data.end(), z.begin(), z.end());
  }
  return out;
}

struct RetrievalOptions {
  std::size_t shortlist = 200;
  bool rerank = true;
  Weighting weighting = Weighting::tfidf;
};

/// Two-stage search in one index: TF-IDF shortlist, then edit-distance re-ranking.
inline std::vector<RankedResult> retrieve(const InvertedIndex& idx, const std::vector<Chunk>& query,
                                          const RetrievalOptions& opt = {}) {
  const auto shortlist = idx.query_topk(query_chunk_sequences(query), opt.shortlist, opt.weighting);
  if (opt.rerank) return rerank(shortlist, video_sequence(query, idx.aw_stride_s()), idx);
  std::vector<RankedResult> out;
  for (std::size_t i = 0; i < shortlist.size(); ++i) out.push_back({shortlist[i].video_id, shortlist[i].score, 0, i + 1});
  return out;
}

/// Late fusion over a visual and an audio index. A modality takes part when
/// its weight is positive and its query has codewords; an absent index is
/// allowed only for a modality that does not take part.
inline std::vector<RankedResult> late_fuse_query(const InvertedIndex* idx_v, const InvertedIndex* idx_a,
                                                 const std::vector<Chunk>& query_v,
                                                 const std::vector<Chunk>& query_a, const FusionConfig& cfg,
                                                 const RetrievalOptions& opt = {}) {
  check(cfg);
  struct Part {
    const InvertedIndex* idx;
    const std::vector<Chunk>* query;
    double weight;
    std::vector<ScoredVideo> scores;
    std::map<std::string, double> by_id;
    double max = 0;
  };
  std::vector<Part> parts;
  auto add = [&](const InvertedIndex* idx, const std::vector<Chunk>& q, double w, const char* name) {
    if (w <= 0) return;
    bool any = false;
    for (const auto& c : q) any = any || c.valid_len > 0;
    if (!any) return;
    require(idx != nullptr, ErrorCode::configuration, std::string("no ") + name + " index for late fusion");
    parts.push_back({idx, &q, w, {}, {}, 0});
  };
  add(idx_v, query_v, cfg.visual_weight, "visual");
  add(idx_a, query_a, cfg.audio_weight, "audio");
  require(!parts.empty(), ErrorCode::empty_query, "no modality has query codewords");

  std::set<std::string> shortlist;
  for (auto& p : parts) {
    p.scores = p.idx->score_all(query_chunk_sequences(*p.query), opt.weighting);
    for (const auto& s : p.scores) p.by_id[s.video_id] = s.score;
    auto top = p.scores;
    const std::size_t keep = std::min(opt.shortlist, top.size());
    std::partial_sort(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(keep), top.end(), ranks_before);
    for (std::size_t i = 0; i < keep; ++i) shortlist.insert(top[i].video_id);
  }
  for (auto& p : parts)
    for (const auto& id : shortlist) {
      const auto it = p.by_id.find(id);
      if (it != p.by_id.end()) p.max = std::max(p.max, it->second);
    }

  std::vector<CodewordSeq> query_seqs;
  for (const auto& p : parts) query_seqs.push_back(video_sequence(*p.query, p.idx->aw_stride_s()));

  std::vector<RankedResult> out;
  for (const auto& id : shortlist) {
    RankedResult r{id, 0, 0, 0};
    for (std::size_t m = 0; m < parts.size(); ++m) {
      const auto& p = parts[m];
      const auto it = p.by_id.find(id);
      const double raw = it == p.by_id.end() ? 0.0 : it->second;
      // A single modality keeps its raw score so its ordering is reproduced exactly.
      r.tfidf_score += parts.size() == 1 ? raw : (p.max > 0 ? p.weight * raw / p.max : 0.0);
      if (opt.rerank && p.idx->has_video(id))
        r.edit_distance += window_edit_distance(query_seqs[m], video_sequence(*p.idx, id));
      else if (opt.rerank)
        r.edit_distance += query_seqs[m].size();
    }
    out.push_back(std::move(r));
  }
  assign_ranks(out);
  return out;
}

}  // namespace vpn
