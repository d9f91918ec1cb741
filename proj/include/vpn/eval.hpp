#pragma once

// Recall@k benchmark over a synthetic corpus: seeded perturbed and truncated
// queries, several retrieval runs on one fixture, JSON and CSV reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpn/engine.hpp"
#include "vpn/media.hpp"

namespace vpn {

/// One retrieval configuration evaluated on the fixture.
struct RunSpec {
  std::string name;
  SearchMode mode = SearchMode::late;
  bool rerank = true;
  Weighting weighting = Weighting::tfidf;
};

/// Parses "mode", "mode:no-rerank" or "mode:no-idf-no-rerank".
inline RunSpec parse_run(const std::string& text) {
  const auto colon = text.find(':');
  const std::string mode = text.substr(0, colon);
  const std::string variant = colon == std::string::npos ? "" : text.substr(colon + 1);
  const auto m = search_mode_from_string(mode);
  require(m.has_value(), ErrorCode::configuration, "unknown run mode '" + mode + "'");
  RunSpec r{text, *m, true, Weighting::tfidf};
  if (variant == "no-rerank") r.rerank = false;
  else if (variant == "no-idf-no-rerank") r.rerank = false, r.weighting = Weighting::tf_only;
  else require(variant.empty(), ErrorCode::configuration, "unknown run variant '" + variant + "'");
  return r;
}

struct EvalSettings {
  CorpusParams corpus{.seed = 7, .count = 500};
  EngineParams engine;
  int query_count = 100;
  double trunc_min = 0.3;  ///< fraction of the source duration
  double trunc_max = 1.0;
  std::uint64_t query_seed = 2024;
  std::size_t shortlist = 200;
  std::pair<double, double> late_weights{1.0, 1.0};
  std::vector<RunSpec> runs = {parse_run("visual"), parse_run("audio"), parse_run("late"),
                               parse_run("late:no-rerank"), parse_run("late:no-idf-no-rerank")};
  bool localization = true;
};

inline void check(const EvalSettings& s) {
  check(s.corpus);
  check(s.engine.chunk);
  require(s.query_count >= 1, ErrorCode::configuration, "zero queries");
  require(s.trunc_min >= 0.1 && s.trunc_min <= s.trunc_max && s.trunc_max <= 1.0, ErrorCode::configuration,
          "truncation range must satisfy 0.1 <= min <= max <= 1");
  require(s.trunc_min * s.corpus.duration_s >= 1.0 - 1e-9, ErrorCode::configuration,
          "shortest query must last at least one second");
  require(s.shortlist >= 1, ErrorCode::configuration, "shortlist must be >= 1");
  require(!s.runs.empty(), ErrorCode::configuration, "no runs requested");
}

struct QuerySpec {
  int id = 0;
  int truth_index = 0;
  std::string truth_id;
  double start_s = 0;
  double length_s = 0;
  PerturbationSpec visual;
  PerturbationSpec audio;
};

/// One visual and one audio transformation per query, kinds drawn uniformly.
inline std::vector<QuerySpec> make_queries(const EvalSettings& s) {
  std::vector<QuerySpec> out;
  for (int q = 0; q < s.query_count; ++q) {
    Rng rng(mix_seed(s.query_seed, static_cast<std::uint64_t>(q)));
    QuerySpec spec;
    spec.id = q;
    spec.truth_index = uniform_int(rng, 0, s.corpus.count - 1);
    spec.truth_id = asset_id(spec.truth_index);
    const double frac = uniform(rng, s.trunc_min, s.trunc_max);
    spec.length_s = std::round(frac * s.corpus.duration_s * s.corpus.fps) / s.corpus.fps;
    spec.start_s = std::round(uniform(rng, 0, s.corpus.duration_s - spec.length_s) * s.corpus.fps) / s.corpus.fps;
    const auto vk = kVisualKinds[uniform_int(rng, 0, static_cast<int>(std::size(kVisualKinds)) - 1)];
    const auto ak = kAudioKinds[uniform_int(rng, 0, static_cast<int>(std::size(kAudioKinds)) - 1)];
    spec.visual = sample_perturbation(vk, rng);
    spec.audio = sample_perturbation(ak, rng);
    out.push_back(std::move(spec));
  }
  return out;
}

inline VideoAsset make_query_asset(const VideoAsset& source, const QuerySpec& q) {
  auto a = truncate(source, q.start_s, q.length_s);
  a = perturb_visual(a, q.visual);
  a = perturb_audio(a, q.audio);
  a.id = "query" + std::to_string(q.id);
  return a;
}

struct EvalFixture {
  EvalSettings settings;
  Engine engine;
  std::vector<QuerySpec> queries;
  std::vector<AssetDescriptors> query_descriptors;
  double build_seconds = 0;
  double query_prep_seconds = 0;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Query descriptors for every model the engine holds, generating sources on demand.
inline void prepare_queries(EvalFixture& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f.queries = make_queries(f.settings);
  f.query_descriptors.clear();
  for (const auto& q : f.queries)
    f.query_descriptors.push_back(f.engine.describe(make_query_asset(gen_asset(f.settings.corpus, q.truth_index), q)));
  f.query_prep_seconds = seconds_since(t0);
}

}  // namespace detail

/// Generates the corpus, builds the engine and prepares queries, all in memory.
/// Assets are generated one at a time and dropped after description.
inline EvalFixture build_fixture(const EvalSettings& s) {
  check(s);
  EvalFixture f;
  f.settings = s;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<AssetDescriptors> corpus;
  corpus.reserve(static_cast<std::size_t>(s.corpus.count));
  for (int i = 0; i < s.corpus.count; ++i) corpus.push_back(Engine::describe(gen_asset(s.corpus, i), s.engine));
  f.engine = Engine::build(corpus, s.engine);
  f.build_seconds = detail::seconds_since(t0);
  detail::prepare_queries(f);
  return f;
}

/// Uses an already built engine over the corpus described by `s.corpus`.
inline EvalFixture fixture_from_engine(Engine engine, EvalSettings s) {
  s.engine = engine.params;
  check(s);
  EvalFixture f;
  f.settings = std::move(s);
  f.engine = std::move(engine);
  detail::prepare_queries(f);
  return f;
}

struct QueryOutcome {
  std::size_t rank = 0;  ///< 1-based rank of the truth video, 0 when absent
  std::string top1;
  double truth_score = 0;
  std::size_t truth_edit = 0;
};

struct Recall {
  std::size_t n = 0;
  double r1 = 0, r10 = 0, r100 = 0;
};

inline Recall recall_of(const std::vector<std::size_t>& ranks) {
  Recall r;
  r.n = ranks.size();
  if (ranks.empty()) return r;
  auto at = [&](std::size_t k) {
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t x) { return x > 0 && x <= k; });
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
  };
  r.r1 = at(1);
  r.r10 = at(10);
  r.r100 = at(100);
  return r;
}

struct RunResult {
  RunSpec spec;
  std::vector<QueryOutcome> outcomes;
  Recall overall;
  std::map<std::string, Recall> per_augmentation;
  std::map<std::string, Recall> per_length;
  double seconds = 0;
};

struct LocalizationStats {
  std::size_t n = 0;
  std::size_t within_one_aw = 0;
  std::size_t iou_at_least_half = 0;
  double mean_iou = 0;
};

struct BenchmarkReport {
  EvalSettings settings;
  std::vector<QuerySpec> queries;
  std::vector<RunResult> runs;
  std::optional<LocalizationStats> localization;

  const RunResult& run(const std::string& name) const {
    for (const auto& r : runs)
      if (r.spec.name == name) return r;
    fail(ErrorCode::lookup, "no run named " + name);
  }
};

/// Bin label for a query length expressed as a fraction of the source duration.
inline std::string length_bin(double fraction) {
  const int lo = std::clamp(static_cast<int>(std::floor(fraction * 10 + 1e-9)), 1, 9);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f-%.1f", lo / 10.0, (lo + 1) / 10.0);
  return buf;
}

inline RunResult evaluate_run(const EvalFixture& f, const RunSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  res.spec = spec;
  const RetrievalOptions opt{f.settings.shortlist, spec.rerank, spec.weighting};
  std::vector<std::size_t> ranks;
  std::map<std::string, std::vector<std::size_t>> by_aug, by_len;
  for (std::size_t i = 0; i < f.queries.size(); ++i) {
    const auto& q = f.queries[i];
    const auto results = f.engine.search(f.query_descriptors[i], spec.mode, opt, f.settings.late_weights);
    QueryOutcome o;
    if (!results.empty()) o.top1 = results.front().video_id;
    for (const auto& r : results)
      if (r.video_id == q.truth_id) {
        o.rank = r.final_rank;
        o.truth_score = r.tfidf_score;
        o.truth_edit = r.edit_distance;
        break;
      }
    ranks.push_back(o.rank);
    by_aug[std::string(to_string(q.visual.kind))].push_back(o.rank);
    by_aug[std::string(to_string(q.audio.kind))].push_back(o.rank);
    by_len[length_bin(q.length_s / f.settings.corpus.duration_s)].push_back(o.rank);
    res.outcomes.push_back(std::move(o));
  }
  res.overall = recall_of(ranks);
  for (const auto& [k, v] : by_aug) res.per_augmentation[k] = recall_of(v);
  for (const auto& [k, v] : by_len) res.per_length[k] = recall_of(v);
  res.seconds = detail::seconds_since(t0);
  return res;
}

/// Localizes each query inside its true source using the visual model (audio
/// when there is no visual model). The prediction is every window at the
/// minimum distance.
inline LocalizationStats evaluate_localization(const EvalFixture& f) {
  const bool use_visual = f.engine.visual.has_value();
  const auto& model = use_visual ? *f.engine.visual : *f.engine.audio;
  const double s_f = f.engine.params.chunk.aw_stride_s;
  LocalizationStats st;
  double iou_sum = 0;
  for (std::size_t i = 0; i < f.queries.size(); ++i) {
    const auto& q = f.queries[i];
    const auto& d = use_visual ? f.query_descriptors[i].visual : f.query_descriptors[i].audio;
    const auto qseq = video_sequence(f.engine.query_chunks(*d, model), s_f);
    const auto cand = video_sequence(model.index, q.truth_id);
    ++st.n;
    if (qseq.empty() || qseq.size() > cand.size()) continue;
    const auto h = localize(qseq, cand, 1, q.truth_id);
    const auto truth_begin = static_cast<std::size_t>(std::llround(q.start_s / s_f));
    const double best = static_cast<double>(*std::min_element(h.distances.begin(), h.distances.end()));
    const double iou = localization_iou(h, best, {truth_begin, truth_begin + qseq.size()});
    iou_sum += iou;
    st.iou_at_least_half += iou >= 0.5 ? 1 : 0;
    const auto diff = h.best_offset > truth_begin ? h.best_offset - truth_begin : truth_begin - h.best_offset;
    st.within_one_aw += diff <= 1 ? 1 : 0;
  }
  st.mean_iou = st.n ? iou_sum / static_cast<double>(st.n) : 0.0;
  return st;
}

inline BenchmarkReport evaluate(const EvalFixture& f) {
  BenchmarkReport rep;
  rep.settings = f.settings;
  rep.queries = f.queries;
  for (const auto& spec : f.settings.runs) {
    require(f.engine.supports(spec.mode), ErrorCode::configuration,
            "engine lacks the model for run " + spec.name);
    rep.runs.push_back(evaluate_run(f, spec));
  }
  if (f.settings.localization && (f.engine.visual || f.engine.audio)) rep.localization = evaluate_localization(f);
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization. Timings are excluded so reports are byte-reproducible.

inline nlohmann::ordered_json to_json(const Recall& r) {
  return {{"n", r.n}, {"R@1", r.r1}, {"R@10", r.r10}, {"R@100", r.r100}};
}

inline nlohmann::ordered_json to_json(const PerturbationSpec& p) {
  return {{"kind", to_string(p.kind)}, {"params", p.params}, {"seed", p.rng_seed}};
}

inline nlohmann::ordered_json settings_json(const EvalSettings& s) {
  nlohmann::ordered_json j;
  j["corpus"] = {{"seed", s.corpus.seed},         {"count", s.corpus.count},   {"duration_s", s.corpus.duration_s},
                 {"fps", s.corpus.fps},           {"sample_rate", s.corpus.sample_rate},
                 {"height", s.corpus.height},     {"width", s.corpus.width}};
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  if (s.engine.visual) models.push_back("visual");
  if (s.engine.audio) models.push_back("audio");
  if (s.engine.early) models.push_back("early");
  if (s.engine.learned) models.push_back("learned");
  j["index"] = {{"k", s.engine.kmeans.k},
                {"max_iters", s.engine.kmeans.max_iters},
                {"kmeans_seed", s.engine.kmeans.seed},
                {"chunk_len_s", s.engine.chunk.chunk_len_s},
                {"chunk_stride_s", s.engine.chunk.chunk_stride_s},
                {"aw_stride_s", s.engine.chunk.aw_stride_s},
                {"models", models}};
  j["query"] = {{"count", s.query_count},
                {"seed", s.query_seed},
                {"trunc_min", s.trunc_min},
                {"trunc_max", s.trunc_max},
                {"shortlist", s.shortlist}};
  j["late_weights"] = {s.late_weights.first, s.late_weights.second};
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& r : s.runs) runs.push_back(r.name);
  j["runs"] = runs;
  j["localization"] = s.localization;
  return j;
}

inline nlohmann::ordered_json to_json(const BenchmarkReport& rep) {
  nlohmann::ordered_json j;
  j["config"] = settings_json(rep.settings);
  auto& qs = j["queries"] = nlohmann::ordered_json::array();
  for (const auto& q : rep.queries)
    qs.push_back({{"id", q.id},
                  {"truth", q.truth_id},
                  {"start_s", q.start_s},
                  {"length_s", q.length_s},
                  {"visual", to_json(q.visual)},
                  {"audio", to_json(q.audio)}});
  auto& runs = j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.runs) {
    nlohmann::ordered_json jr;
    jr["name"] = r.spec.name;
    jr["mode"] = to_string(r.spec.mode);
    jr["rerank"] = r.spec.rerank;
    jr["idf"] = r.spec.weighting == Weighting::tfidf;
    jr["recall"] = to_json(r.overall);
    for (const auto& [k, v] : r.per_augmentation) jr["per_augmentation"][k] = to_json(v);
    for (const auto& [k, v] : r.per_length) jr["per_length"][k] = to_json(v);
    auto& recs = jr["records"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
      const auto& o = r.outcomes[i];
      recs.push_back({{"query", rep.queries[i].id},
                      {"truth", rep.queries[i].truth_id},
                      {"rank", o.rank},
                      {"top1", o.top1},
                      {"truth_score", o.truth_score},
                      {"truth_edit", o.truth_edit}});
    }
    runs.push_back(std::move(jr));
  }
  if (rep.localization) {
    const auto& l = *rep.localization;
    j["localization"] = {{"n", l.n},
                         {"within_one_aw", l.within_one_aw},
                         {"iou_at_least_half", l.iou_at_least_half},
                         {"mean_iou", l.mean_iou}};
  }
  return j;
}

inline std::string to_csv(const BenchmarkReport& rep) {
  std::ostringstream out;
  out << "run,group,key,n,r_at_1,r_at_10,r_at_100\n";
  char buf[128];
  auto row = [&](const std::string& run, const char* group, const std::string& key, const Recall& r) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", r.n, r.r1, r.r10, r.r100);
    out << run << ',' << group << ',' << key << ',' << buf;
  };
  for (const auto& r : rep.runs) {
    row(r.spec.name, "overall", "all", r.overall);
    for (const auto& [k, v] : r.per_augmentation) row(r.spec.name, "augmentation", k, v);
    for (const auto& [k, v] : r.per_length) row(r.spec.name, "length", k, v);
  }
  return out.str();
}

}  // namespace vpn
