#pragma once

// End-to-end retrieval engine: per-modality codebooks and indices built from
// a corpus, queried with any of the fusion strategies.
//
// On-disk layout of a built engine directory:
//   engine.json                      chunk geometry, k-means settings, models present
//   <model>.vpnc, <model>.vpni       model in {visual, audio, early, learned}
//   learned_ep.vpnw                  E_p, when the learned model exists

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vpn/codebook.hpp"
#include "vpn/fusion.hpp"
#include "vpn/inverted_index.hpp"
#include "vpn/media.hpp"
#include "vpn/rerank.hpp"
#include "vpn/weights.hpp"

namespace vpn {

enum class SearchMode { visual, audio, late, early, learned };

inline std::string_view to_string(SearchMode m) {
  switch (m) {
    case SearchMode::visual: return "visual";
    case SearchMode::audio: return "audio";
    case SearchMode::late: return "late";
    case SearchMode::early: return "early";
    case SearchMode::learned: return "learned";
  }
  return "?";
}

inline std::optional<SearchMode> search_mode_from_string(std::string_view s) {
  for (auto m : {SearchMode::visual, SearchMode::audio, SearchMode::late, SearchMode::early, SearchMode::learned})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

struct ModalityModel {
  Codebook codebook;
  InvertedIndex index;
};

/// Trains a codebook on every descriptor of the corpus and indexes its chunks.
/// Chunk ids are assigned in corpus order starting at 0.
inline ModalityModel build_model(const std::vector<DescriptorSet>& corpus, Modality modality,
                                 const KMeansOptions& kmeans, const ChunkParams& chunk) {
  require(!corpus.empty(), ErrorCode::empty_input, "no descriptors to index");
  const int dim = corpus.front().dim;
  std::size_t rows = 0;
  for (const auto& d : corpus) {
    require(d.dim == dim, ErrorCode::shape, "descriptor dimensions differ across the corpus");
    rows += d.count();
  }
  RowMatrixF samples(static_cast<Eigen::Index>(rows), dim);
  Eigen::Index r = 0;
  for (const auto& d : corpus)
    for (std::size_t i = 0; i < d.count(); ++i, ++r)
      samples.row(r) = Eigen::Map<const Eigen::RowVectorXf>(d.row(i).data(), dim);

  ModalityModel m;
  m.codebook = train_codebook(samples, kmeans, modality);
  std::vector<Chunk> chunks;
  for (const auto& d : corpus) {
    auto c = quantize_chunks(d, m.codebook, chunk);
    chunks.insert(chunks.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  assign_chunk_ids(chunks, 0);
  m.index = InvertedIndex::build(std::move(chunks), static_cast<std::uint32_t>(m.codebook.k()), modality,
                                 corpus.front().aw_stride_s);
  return m;
}

struct EngineParams {
  ChunkParams chunk;
  KMeansOptions kmeans;
  bool visual = true;
  bool audio = true;
  bool early = false;
  bool learned = false;
  std::optional<RowMatrixF> learned_weights;  ///< E_p for the learned model
};

/// Descriptors of one asset for every model the engine holds.
struct AssetDescriptors {
  std::optional<DescriptorSet> visual, audio, early, learned;
};

/// Early fusion of streams whose AW counts differ by clipping to the shorter.
inline DescriptorSet early_fuse_clipped(DescriptorSet v, DescriptorSet a) {
  const std::size_t n = std::min(v.count(), a.count());
  v.data.resize(n * static_cast<std::size_t>(v.dim));
  a.data.resize(n * static_cast<std::size_t>(a.dim));
  return early_fuse(v, a);
}

class Engine {
 public:
  EngineParams params;
  std::optional<ModalityModel> visual, audio, early, learned;

  AssetDescriptors describe(const VideoAsset& asset) const { return describe(asset, params); }

  static AssetDescriptors describe(const VideoAsset& asset, const EngineParams& p) {
    AssetDescriptors d;
    const double s_f = p.chunk.aw_stride_s;
    if (p.visual || p.early) d.visual = extract_visual(asset, EncoderSpec::visual(), s_f);
    if (p.audio || p.early || p.learned) d.audio = extract_audio(asset, EncoderSpec::audio(), s_f);
    if (p.early) d.early = early_fuse_clipped(*d.visual, *d.audio);
    if (p.learned) d.learned = learned_fuse_descriptors(asset, *d.audio, p.learned_weights);
    if (!p.visual) d.visual.reset();
    if (!p.audio) d.audio.reset();
    return d;
  }

  static Engine build(const std::vector<AssetDescriptors>& corpus, const EngineParams& p) {
    check(p.chunk);
    require(p.visual || p.audio || p.early || p.learned, ErrorCode::configuration, "no model selected");
    if (p.learned) check(FusionConfig{FusionMode::learned, p.learned_weights, 1, 1});
    Engine e;
    e.params = p;
    auto gather = [&](auto member) {
      std::vector<DescriptorSet> out;
      for (const auto& d : corpus) {
        require((d.*member).has_value(), ErrorCode::data, "corpus descriptors missing a modality");
        out.push_back(*(d.*member));
      }
      return out;
    };
    if (p.visual) e.visual = build_model(gather(&AssetDescriptors::visual), Modality::visual, p.kmeans, p.chunk);
    if (p.audio) e.audio = build_model(gather(&AssetDescriptors::audio), Modality::audio, p.kmeans, p.chunk);
    if (p.early) e.early = build_model(gather(&AssetDescriptors::early), Modality::fused, p.kmeans, p.chunk);
    if (p.learned)
      e.learned = build_model(gather(&AssetDescriptors::learned), Modality::fused, p.kmeans, p.chunk);
    return e;
  }

  static Engine build(const std::vector<VideoAsset>& assets, const EngineParams& p) {
    std::vector<AssetDescriptors> corpus;
    corpus.reserve(assets.size());
    for (const auto& a : assets) corpus.push_back(describe(a, p));
    return build(corpus, p);
  }

  bool supports(SearchMode m) const {
    switch (m) {
      case SearchMode::visual: return visual.has_value();
      case SearchMode::audio: return audio.has_value();
      case SearchMode::late: return visual.has_value() || audio.has_value();
      case SearchMode::early: return early.has_value();
      case SearchMode::learned: return learned.has_value();
    }
    return false;
  }

  const ModalityModel& model(SearchMode m) const {
    const std::optional<ModalityModel>* slot = nullptr;
    switch (m) {
      case SearchMode::visual: slot = &visual; break;
      case SearchMode::audio: slot = &audio; break;
      case SearchMode::early: slot = &early; break;
      case SearchMode::learned: slot = &learned; break;
      case SearchMode::late: fail(ErrorCode::configuration, "late fusion spans two models");
    }
    require(slot->has_value(), ErrorCode::configuration, std::string("engine has no ") + std::string(to_string(m)) +
                                                             " model");
    return **slot;
  }

  std::vector<Chunk> query_chunks(const DescriptorSet& d, const ModalityModel& m) const {
    return quantize_chunks(d, m.codebook, params.chunk);
  }

  /// `weights` are the late-fusion (visual, audio) weights; ignored otherwise.
  std::vector<RankedResult> search(const AssetDescriptors& q, SearchMode mode, const RetrievalOptions& opt = {},
                                   std::pair<double, double> weights = {1.0, 1.0}) const {
    auto single = [&](const std::optional<DescriptorSet>& d, SearchMode m) {
      const auto& mm = model(m);
      require(d.has_value(), ErrorCode::configuration,
              std::string("query lacks descriptors for ") + std::string(to_string(m)));
      return retrieve(mm.index, query_chunks(*d, mm), opt);
    };
    switch (mode) {
      case SearchMode::visual: return single(q.visual, mode);
      case SearchMode::audio: return single(q.audio, mode);
      case SearchMode::early: return single(q.early, mode);
      case SearchMode::learned: return single(q.learned, mode);
      case SearchMode::late: {
        FusionConfig cfg{FusionMode::late, std::nullopt, weights.first, weights.second};
        std::vector<Chunk> qv, qa;
        if (cfg.visual_weight > 0) {
          require(visual && q.visual, ErrorCode::configuration, "late fusion needs visual model and descriptors");
          qv = query_chunks(*q.visual, *visual);
        }
        if (cfg.audio_weight > 0) {
          require(audio && q.audio, ErrorCode::configuration, "late fusion needs audio model and descriptors");
          qa = query_chunks(*q.audio, *audio);
        }
        return late_fuse_query(visual ? &visual->index : nullptr, audio ? &audio->index : nullptr, qv, qa, cfg, opt);
      }
    }
    return {};
  }

  std::vector<RankedResult> search(const VideoAsset& q, SearchMode mode, const RetrievalOptions& opt = {},
                                   std::pair<double, double> weights = {1.0, 1.0}) const {
    return search(describe(q), mode, opt, weights);
  }

  void save(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
    nlohmann::ordered_json j;
    j["format"] = "vpn-engine";
    j["version"] = 1;
    j["chunk_len_s"] = params.chunk.chunk_len_s;
    j["chunk_stride_s"] = params.chunk.chunk_stride_s;
    j["aw_stride_s"] = params.chunk.aw_stride_s;
    j["k"] = params.kmeans.k;
    j["max_iters"] = params.kmeans.max_iters;
    j["kmeans_seed"] = params.kmeans.seed;
    j["models"] = nlohmann::ordered_json::array();
    for (const auto& [name, slot] : slots()) {
      if (!slot->has_value()) continue;
      j["models"].push_back(name);
      write_codebook((*slot)->codebook, dir / (std::string(name) + ".vpnc"));
      (*slot)->index.save(dir / (std::string(name) + ".vpni"));
    }
    if (learned && params.learned_weights) write_weights(*params.learned_weights, dir / "learned_ep.vpnw");
    std::ofstream out(dir / "engine.json", std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorCode::io, "cannot write " + (dir / "engine.json").string());
  }

  static Engine load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "engine.json");
    if (!in) fail(ErrorCode::io, "no engine.json in " + dir.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::format, std::string("engine.json: ") + e.what());
    }
    Engine e;
    try {
      require(j.at("format") == "vpn-engine" && j.at("version") == 1, ErrorCode::format, "not an engine directory");
      e.params.chunk = {j.at("chunk_len_s"), j.at("chunk_stride_s"), j.at("aw_stride_s")};
      e.params.kmeans.k = j.at("k");
      e.params.kmeans.max_iters = j.at("max_iters");
      e.params.kmeans.seed = j.at("kmeans_seed");
      e.params.visual = e.params.audio = false;
      for (const auto& name : j.at("models")) {
        const std::string n = name;
        ModalityModel m{read_codebook(dir / (n + ".vpnc")), InvertedIndex::load(dir / (n + ".vpni"))};
        if (n == "visual") e.visual = std::move(m), e.params.visual = true;
        else if (n == "audio") e.audio = std::move(m), e.params.audio = true;
        else if (n == "early") e.early = std::move(m), e.params.early = true;
        else if (n == "learned") e.learned = std::move(m), e.params.learned = true;
        else fail(ErrorCode::format, "unknown model " + n);
      }
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::format, std::string("engine.json: ") + ex.what());
    }
    if (e.learned) e.params.learned_weights = read_weights(dir / "learned_ep.vpnw");
    check(e.params.chunk);
    return e;
  }

 private:
  std::array<std::pair<const char*, const std::optional<ModalityModel>*>, 4> slots() const {
    return {{{"visual", &visual}, {"audio", &audio}, {"early", &early}, {"learned", &learned}}};
  }
};

}  // namespace vpn
