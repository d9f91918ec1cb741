// vpn: command-line front end for corpus generation, indexing, search,
// localization, benchmarking and training.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data or IO error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vpn/config.hpp"
#include "vpn/engine.hpp"
#include "vpn/eval.hpp"
#include "vpn/media_io.hpp"
#include "vpn/training.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;

  nlohmann::json load(std::vector<std::string> extra = {}) const {
    auto all = overrides;
    all.insert(all.end(), extra.begin(), extra.end());
    return vpn::load_config(config_path, all);
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "JSON config file");
  sub->add_option("--set", c.overrides, "Config override key.path=value (repeatable)");
}

/// Collects flag values as config overrides so that flags beat the file.
struct Overrides {
  std::vector<std::string> items;

  template <typename T>
  void add(const std::string& key, const std::optional<T>& v) {
    if (!v) return;
    std::ostringstream s;
    if constexpr (std::is_same_v<T, std::string>) s << key << '=' << nlohmann::json(*v).dump();
    else s << key << '=' << *v;
    items.push_back(s.str());
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) vpn::fail(vpn::ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) vpn::fail(vpn::ErrorCode::io, "write failed: " + path.string());
}

void print_results(const std::vector<vpn::RankedResult>& results, std::size_t top) {
  std::printf("%-6s %-12s %14s %6s\n", "rank", "video", "score", "edit");
  for (std::size_t i = 0; i < std::min(top, results.size()); ++i)
    std::printf("%-6zu %-12s %14.6f %6zu\n", results[i].final_rank, results[i].video_id.c_str(),
                results[i].tfidf_score, results[i].edit_distance);
}

nlohmann::ordered_json results_json(const std::vector<vpn::RankedResult>& results) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : results)
    arr.push_back({{"rank", r.final_rank},
                   {"video_id", r.video_id},
                   {"score", r.tfidf_score},
                   {"edit_distance", r.edit_distance}});
  return arr;
}

// ---------------------------------------------------------------------------

struct GenCorpusArgs {
  Common common;
  std::optional<std::string> out;
  std::optional<int> count;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

int cmd_gen_corpus(const GenCorpusArgs& a) {
  Overrides o;
  o.add("paths.data_dir", a.out);
  o.add("corpus.count", a.count);
  o.add("corpus.seed", a.seed);
  o.add("corpus.duration_s", a.duration);
  const auto cfg = a.common.load(o.items);
  const auto p = vpn::corpus_params(cfg);
  const fs::path dir = vpn::config_value<std::string>(cfg, "paths.data_dir");

  std::vector<fs::path> written;
  try {
    std::error_code ec;
    fs::create_directories(dir / "assets", ec);
    if (ec) vpn::fail(vpn::ErrorCode::io, "cannot create " + (dir / "assets").string() + ": " + ec.message());
    std::vector<vpn::ManifestEntry> entries;
    for (int i = 0; i < p.count; ++i) {
      const auto asset = vpn::gen_asset(p, i);
      const fs::path rel = fs::path("assets") / (asset.id + ".vpna");
      written.push_back(dir / rel);
      vpn::write_asset(asset, dir / rel);
      entries.push_back({asset.id, rel.string(), asset.fps, asset.sample_rate, asset.duration_s()});
    }
    written.push_back(dir / "manifest.jsonl");
    vpn::write_manifest(entries, dir / "manifest.jsonl");
  } catch (...) {
    std::error_code ignore;
    for (const auto& f : written) fs::remove(f, ignore);
    throw;
  }
  std::printf("wrote %d assets and %s\n", p.count, (dir / "manifest.jsonl").string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  Common common;
  std::optional<std::string> manifest;
  std::optional<std::string> out;
  std::optional<int> k;
};

std::vector<vpn::ManifestEntry> checked_manifest(const fs::path& path) {
  auto entries = vpn::read_manifest(path);
  require(!entries.empty(), vpn::ErrorCode::data, "manifest is empty: " + path.string());
  std::string missing;
  for (const auto& e : entries)
    if (!fs::exists(e.path)) missing += (missing.empty() ? "" : ", ") + e.id;
  if (!missing.empty()) vpn::fail(vpn::ErrorCode::data, "missing assets: " + missing);
  return entries;
}

int cmd_build(const BuildArgs& a) {
  Overrides o;
  o.add("paths.index_dir", a.out);
  o.add("index.k", a.k);
  const auto cfg = a.common.load(o.items);
  const auto params = vpn::engine_params(cfg);
  const fs::path manifest =
      a.manifest ? fs::path(*a.manifest) : fs::path(vpn::config_value<std::string>(cfg, "paths.data_dir")) / "manifest.jsonl";
  const fs::path out = vpn::config_value<std::string>(cfg, "paths.index_dir");

  const auto entries = checked_manifest(manifest);
  std::vector<vpn::AssetDescriptors> corpus;
  for (const auto& e : entries) {
    auto asset = vpn::read_asset(e.path);
    corpus.push_back(vpn::Engine::describe(asset, params));
  }
  const auto engine = vpn::Engine::build(corpus, params);
  engine.save(out);

  for (const auto& [name, member] : {std::pair{"visual", &vpn::AssetDescriptors::visual},
                                     std::pair{"audio", &vpn::AssetDescriptors::audio},
                                     std::pair{"early", &vpn::AssetDescriptors::early},
                                     std::pair{"learned", &vpn::AssetDescriptors::learned}}) {
    if (!(corpus.front().*member)) continue;
    const fs::path dir = out / "descriptors" / name;
    fs::create_directories(dir);
    for (const auto& d : corpus) vpn::write_descriptors(*(d.*member), dir / ((d.*member)->video_id + ".vpnd"));
  }

  nlohmann::ordered_json report;
  report["manifest"] = manifest.string();
  report["videos"] = entries.size();
  for (auto m : {vpn::SearchMode::visual, vpn::SearchMode::audio, vpn::SearchMode::early, vpn::SearchMode::learned}) {
    if (!engine.supports(m)) continue;
    const auto& model = engine.model(m);
    std::vector<std::uint64_t> usage(static_cast<std::size_t>(model.codebook.k()), 0);
    for (const auto& [id, c] : model.index.chunk_table())
      for (std::uint32_t i = 0; i < c.valid_len; ++i) ++usage[c.codewords[i]];
    const auto used = std::count_if(usage.begin(), usage.end(), [](auto u) { return u > 0; });
    report["models"][std::string(vpn::to_string(m))] = {{"chunks", model.index.total_chunks()},
                                                         {"k", model.codebook.k()},
                                                         {"codewords_used", used},
                                                         {"kmeans_inertia", model.codebook.inertia_history},
                                                         {"codeword_usage", usage}};
    std::printf("%-8s %6llu chunks, %lld/%d codewords used\n", std::string(vpn::to_string(m)).c_str(),
                static_cast<unsigned long long>(model.index.total_chunks()), static_cast<long long>(used),
                model.codebook.k());
  }
  write_text(out / "build_report.json", report.dump(2) + "\n");
  std::printf("engine written to %s\n", out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct QueryArgs {
  Common common;
  std::optional<std::string> index;
  std::string asset;
  std::string visual_desc, audio_desc;
  std::optional<std::string> fusion;
  std::string modality;
  std::optional<std::string> weights;
  std::optional<std::size_t> k;
  std::size_t top = 10;
  bool no_rerank = false;
  bool no_idf = false;
  bool localize = false;
  std::string heatmap_out;
  std::string json_out;
};

vpn::AssetDescriptors query_descriptors(const vpn::Engine& engine, const std::string& asset,
                                        const std::string& visual_desc, const std::string& audio_desc) {
  if (!asset.empty()) return engine.describe(vpn::read_asset(asset));
  require(!visual_desc.empty() || !audio_desc.empty(), vpn::ErrorCode::configuration,
          "give --asset or descriptor files");
  vpn::AssetDescriptors d;
  if (!visual_desc.empty()) d.visual = vpn::read_descriptors(visual_desc);
  if (!audio_desc.empty()) d.audio = vpn::read_descriptors(audio_desc);
  if (d.visual && d.audio && engine.early) d.early = vpn::early_fuse_clipped(*d.visual, *d.audio);
  return d;
}

std::pair<double, double> parse_weights(const std::string& s) {
  double v = 0, a = 0;
  char comma = 0;
  std::istringstream in(s);
  if (!(in >> v >> comma >> a) || comma != ',' || v < 0 || a < 0)
    vpn::fail(vpn::ErrorCode::configuration, "weights must look like 1,0");
  return {v, a};
}

int cmd_query(const QueryArgs& a) {
  Overrides o;
  o.add("paths.index_dir", a.index);
  o.add("fusion.mode", a.fusion);
  o.add("query.shortlist", a.k);
  const auto cfg = a.common.load(o.items);
  const auto engine = vpn::Engine::load(vpn::config_value<std::string>(cfg, "paths.index_dir"));

  auto weights = vpn::late_weights(cfg);
  if (a.weights) weights = parse_weights(*a.weights);
  auto mode = vpn::search_mode_from_string(vpn::config_value<std::string>(cfg, "fusion.mode"));
  require(mode && *mode != vpn::SearchMode::visual && *mode != vpn::SearchMode::audio, vpn::ErrorCode::configuration,
          "fusion mode must be early, late or learned");
  if (a.modality == "visual") mode = vpn::SearchMode::visual;
  else if (a.modality == "audio") mode = vpn::SearchMode::audio;
  else require(a.modality.empty(), vpn::ErrorCode::configuration, "modality must be visual or audio");

  const auto q = query_descriptors(engine, a.asset, a.visual_desc, a.audio_desc);
  const vpn::RetrievalOptions opt{vpn::config_value<std::size_t>(cfg, "query.shortlist"), !a.no_rerank,
                                  a.no_idf ? vpn::Weighting::tf_only : vpn::Weighting::tfidf};
  const auto results = engine.search(q, *mode, opt, weights);
  print_results(results, a.top);

  nlohmann::ordered_json out;
  out["mode"] = vpn::to_string(*mode);
  out["results"] = results_json(results);
  if (a.localize && !results.empty()) {
    const auto m = *mode == vpn::SearchMode::late ? (q.visual && engine.visual ? vpn::SearchMode::visual
                                                                                 : vpn::SearchMode::audio)
                                                   : *mode;
    const auto& model = engine.model(m);
    const auto& d = m == vpn::SearchMode::visual   ? q.visual
                    : m == vpn::SearchMode::audio  ? q.audio
                    : m == vpn::SearchMode::early  ? q.early
                                                   : q.learned;
    require(d.has_value(), vpn::ErrorCode::configuration, "no descriptors to localize with");
    const auto qseq = vpn::video_sequence(engine.query_chunks(*d, model), model.index.aw_stride_s());
    const auto cand = vpn::video_sequence(model.index, results.front().video_id);
    const auto h = vpn::localize(qseq, cand, 1, results.front().video_id);
    out["heatmap"] = h.to_json();
    if (!a.heatmap_out.empty()) write_text(a.heatmap_out, h.to_json().dump(2) + "\n");
    std::printf("best offset in %s: AW %zu (%.2f s), distance %zu\n", h.candidate_video_id.c_str(), h.best_offset,
                static_cast<double>(h.best_offset) * model.index.aw_stride_s(),
                h.distances[h.best_offset / h.stride]);
  }
  if (!a.json_out.empty()) write_text(a.json_out, out.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct LocalizeArgs {
  Common common;
  std::optional<std::string> index;
  std::string asset;
  std::string video;
  std::string modality = "visual";
  std::size_t stride = 1;
  std::optional<double> threshold;
  std::vector<std::size_t> truth;
  std::string out;
};

int cmd_localize(const LocalizeArgs& a) {
  Overrides o;
  o.add("paths.index_dir", a.index);
  const auto cfg = a.common.load(o.items);
  const auto engine = vpn::Engine::load(vpn::config_value<std::string>(cfg, "paths.index_dir"));
  const auto mode = vpn::search_mode_from_string(a.modality);
  require(mode && *mode != vpn::SearchMode::late, vpn::ErrorCode::configuration,
          "modality must be visual, audio, early or learned");
  const auto& model = engine.model(*mode);
  const auto d = engine.describe(vpn::read_asset(a.asset));
  const auto& desc = *mode == vpn::SearchMode::visual  ? d.visual
                     : *mode == vpn::SearchMode::audio ? d.audio
                     : *mode == vpn::SearchMode::early ? d.early
                                                       : d.learned;
  require(desc.has_value(), vpn::ErrorCode::configuration, "no descriptors for " + a.modality);
  const auto qseq = vpn::video_sequence(engine.query_chunks(*desc, model), model.index.aw_stride_s());
  const auto h = vpn::localize(qseq, vpn::video_sequence(model.index, a.video), a.stride, a.video);
  auto j = h.to_json();
  std::printf("best offset AW %zu (%.2f s)\n", h.best_offset,
              static_cast<double>(h.best_offset) * model.index.aw_stride_s());
  if (!a.truth.empty()) {
    require(a.truth.size() == 2 && a.truth[0] <= a.truth[1], vpn::ErrorCode::configuration,
            "--truth takes BEGIN END in AW units");
    const double thr = a.threshold ? *a.threshold
                                   : static_cast<double>(*std::min_element(h.distances.begin(), h.distances.end()));
    const double iou = vpn::localization_iou(h, thr, {a.truth[0], a.truth[1]});
    j["iou"] = iou;
    std::printf("IoU %.4f at threshold %.2f\n", iou, thr);
  }
  if (a.out.empty()) std::cout << j.dump(2) << '\n';
  else write_text(a.out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::optional<std::string> index;
  std::optional<std::string> out;
  std::optional<int> queries;
  std::optional<int> count;
  std::optional<int> k;
  bool use_index = false;
};

int cmd_eval(const EvalArgs& a) {
  Overrides o;
  o.add("paths.report", a.out);
  o.add("query.count", a.queries);
  o.add("corpus.count", a.count);
  o.add("index.k", a.k);
  o.add("paths.index_dir", a.index);
  const auto cfg = a.common.load(o.items);
  const auto settings = vpn::eval_settings(cfg);

  const auto fixture =
      a.index ? vpn::fixture_from_engine(vpn::Engine::load(vpn::config_value<std::string>(cfg, "paths.index_dir")),
                                         settings)
              : vpn::build_fixture(settings);
  const auto report = vpn::evaluate(fixture);

  const std::string prefix = vpn::config_value<std::string>(cfg, "paths.report");
  const fs::path parent = fs::path(prefix).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_text(prefix + ".json", vpn::to_json(report).dump(2) + "\n");
  write_text(prefix + ".csv", vpn::to_csv(report));

  std::printf("%-24s %7s %7s %7s %9s\n", "run", "R@1", "R@10", "R@100", "time_s");
  for (const auto& r : report.runs)
    std::printf("%-24s %7.3f %7.3f %7.3f %9.2f\n", r.spec.name.c_str(), r.overall.r1, r.overall.r10, r.overall.r100,
                r.seconds);
  if (report.localization)
    std::printf("localization: %zu/%zu within 1 AW, %zu/%zu IoU >= 0.5, mean IoU %.3f\n",
                report.localization->within_one_aw, report.localization->n, report.localization->iou_at_least_half,
                report.localization->n, report.localization->mean_iou);
  std::printf("build %.1f s, query prep %.1f s; report %s.{json,csv}\n", fixture.build_seconds,
              fixture.query_prep_seconds, prefix.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainEncoderArgs {
  Common common;
  std::string modality = "visual";
  std::string out;
};

int cmd_train_encoder(const TrainEncoderArgs& a) {
  const auto cfg = a.common.load();
  const auto m = vpn::modality_from_string(a.modality);
  require(m.has_value(), vpn::ErrorCode::configuration, "modality must be visual, audio or fused");
  vpn::GroupOptions g;
  g.groups = vpn::config_value<int>(cfg, "train.groups");
  g.views = vpn::config_value<int>(cfg, "train.views");
  g.seed = vpn::config_value<std::uint64_t>(cfg, "train.seed");
  vpn::TrainOptions t;
  t.epochs = vpn::config_value<int>(cfg, "train.epochs");
  t.learning_rate = vpn::config_value<double>(cfg, "train.learning_rate");
  t.seed = g.seed;
  t.temperature = vpn::config_value<double>(cfg, "train.temperature");
  t.out_dim = vpn::config_value<int>(cfg, "train.out_dim");

  const auto data = vpn::make_training_groups(vpn::corpus_params(cfg), *m, g);
  const auto res = vpn::train_linear_encoder(data, t);
  for (std::size_t e = 0; e < res.epoch_loss.size(); ++e) std::printf("epoch %3zu  loss %.6f\n", e + 1, res.epoch_loss[e]);
  vpn::write_weights(res.weights, a.out);
  std::printf("weights %lld x %lld written to %s\n", static_cast<long long>(res.weights.rows()),
              static_cast<long long>(res.weights.cols()), a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainCodebookArgs {
  Common common;
  std::optional<std::string> manifest;
  std::string modality = "visual";
  std::optional<int> k;
  std::string out;
};

int cmd_train_codebook(const TrainCodebookArgs& a) {
  Overrides o;
  o.add("index.k", a.k);
  const auto cfg = a.common.load(o.items);
  const auto m = vpn::modality_from_string(a.modality);
  require(m && *m != vpn::Modality::fused, vpn::ErrorCode::configuration, "modality must be visual or audio");
  const double s_f = vpn::config_value<double>(cfg, "index.aw_stride_s");
  const fs::path manifest =
      a.manifest ? fs::path(*a.manifest) : fs::path(vpn::config_value<std::string>(cfg, "paths.data_dir")) / "manifest.jsonl";

  std::vector<vpn::DescriptorSet> descs;
  std::size_t rows = 0;
  for (const auto& e : checked_manifest(manifest)) {
    const auto asset = vpn::read_asset(e.path);
    descs.push_back(*m == vpn::Modality::visual ? vpn::extract_visual(asset, vpn::EncoderSpec::visual(), s_f)
                                                 : vpn::extract_audio(asset, vpn::EncoderSpec::audio(), s_f));
    rows += descs.back().count();
  }
  vpn::RowMatrixF samples(static_cast<Eigen::Index>(rows), descs.front().dim);
  Eigen::Index r = 0;
  for (const auto& d : descs)
    for (std::size_t i = 0; i < d.count(); ++i, ++r)
      samples.row(r) = Eigen::Map<const Eigen::RowVectorXf>(d.row(i).data(), d.dim);

  vpn::KMeansOptions km;
  km.k = vpn::config_value<int>(cfg, "index.k");
  km.max_iters = vpn::config_value<int>(cfg, "index.max_iters");
  km.seed = vpn::config_value<std::uint64_t>(cfg, "index.kmeans_seed");
  const auto cb = vpn::train_codebook(samples, km, *m);
  for (std::size_t i = 0; i < cb.inertia_history.size(); ++i)
    std::printf("iter %3zu  inertia %.6f\n", i + 1, cb.inertia_history[i]);
  vpn::write_codebook(cb, a.out);
  std::printf("codebook %d x %d written to %s\n", cb.k(), cb.dim(), a.out.c_str());
  return 0;
}

int exit_code(vpn::ErrorCode c) {
  switch (c) {
    case vpn::ErrorCode::configuration:
    case vpn::ErrorCode::parameter: return 1;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video copy detection with codeword indexing, re-ranking and audio-visual fusion"};
  app.require_subcommand(1);

  GenCorpusArgs gen;
  auto* s_gen = app.add_subcommand("gen-corpus", "Generate synthetic assets and a manifest");
  add_common(s_gen, gen.common);
  s_gen->add_option("-o,--out", gen.out, "Output directory");
  s_gen->add_option("-n,--count", gen.count, "Number of videos");
  s_gen->add_option("--seed", gen.seed, "Corpus seed");
  s_gen->add_option("--duration", gen.duration, "Seconds per video");

  BuildArgs build;
  auto* s_build = app.add_subcommand("build", "Train codebooks and build indices from a manifest");
  add_common(s_build, build.common);
  s_build->add_option("-m,--manifest", build.manifest, "Manifest JSONL");
  s_build->add_option("-o,--out", build.out, "Engine directory");
  s_build->add_option("-k", build.k, "Codebook size");

  QueryArgs query;
  auto* s_query = app.add_subcommand("query", "Search the index with a query video or descriptor files");
  add_common(s_query, query.common);
  s_query->add_option("-i,--index", query.index, "Engine directory");
  s_query->add_option("-a,--asset", query.asset, "Query asset (.vpna)");
  s_query->add_option("--visual-descriptors", query.visual_desc, "Visual descriptors (.vpnd)");
  s_query->add_option("--audio-descriptors", query.audio_desc, "Audio descriptors (.vpnd)");
  s_query->add_option("--fusion", query.fusion, "early, late or learned");
  s_query->add_option("--modality", query.modality, "Single modality search: visual or audio");
  s_query->add_option("--weights", query.weights, "Late fusion weights, e.g. 1,0");
  s_query->add_option("-k,--shortlist", query.k, "TF-IDF shortlist size");
  s_query->add_option("--top", query.top, "Results to print");
  s_query->add_flag("--no-rerank", query.no_rerank, "Rank by TF-IDF only");
  s_query->add_flag("--no-idf", query.no_idf, "Use raw codeword counts");
  s_query->add_flag("--localize", query.localize, "Localize the query in the top result");
  s_query->add_option("--heatmap", query.heatmap_out, "Write the localization heatmap JSON here");
  s_query->add_option("--json", query.json_out, "Write results JSON here");

  LocalizeArgs loc;
  auto* s_loc = app.add_subcommand("localize", "Edit-distance heatmap of a query over one indexed video");
  add_common(s_loc, loc.common);
  s_loc->add_option("-i,--index", loc.index, "Engine directory");
  s_loc->add_option("-a,--asset", loc.asset, "Query asset (.vpna)")->required();
  s_loc->add_option("-v,--video", loc.video, "Candidate video id")->required();
  s_loc->add_option("--modality", loc.modality, "visual, audio, early or learned");
  s_loc->add_option("--stride", loc.stride, "Offset stride in AWs");
  s_loc->add_option("--threshold", loc.threshold, "Distance threshold for IoU (default: minimum)");
  s_loc->add_option("--truth", loc.truth, "Ground-truth interval BEGIN END in AWs")->expected(2);
  s_loc->add_option("-o,--out", loc.out, "Heatmap JSON path (default stdout)");

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Run the recall@k benchmark");
  add_common(s_eval, ev.common);
  s_eval->add_option("-i,--index", ev.index, "Use a built engine instead of building in memory");
  s_eval->add_option("-o,--out", ev.out, "Report path prefix (.json and .csv)");
  s_eval->add_option("-q,--queries", ev.queries, "Number of queries");
  s_eval->add_option("-n,--count", ev.count, "Database videos");
  s_eval->add_option("-k", ev.k, "Codebook size");

  TrainEncoderArgs te;
  auto* s_te = app.add_subcommand("train-encoder", "Contrastively train a linear encoder or E_p");
  add_common(s_te, te.common);
  s_te->add_option("--modality", te.modality, "visual, audio or fused");
  s_te->add_option("-o,--out", te.out, "Weights file (.vpnw)")->required();

  TrainCodebookArgs tc;
  auto* s_tc = app.add_subcommand("train-codebook", "Train one k-means codebook from a manifest");
  add_common(s_tc, tc.common);
  s_tc->add_option("-m,--manifest", tc.manifest, "Manifest JSONL");
  s_tc->add_option("--modality", tc.modality, "visual or audio");
  s_tc->add_option("-k", tc.k, "Codebook size");
  s_tc->add_option("-o,--out", tc.out, "Codebook file (.vpnc)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (s_gen->parsed()) return cmd_gen_corpus(gen);
    if (s_build->parsed()) return cmd_build(build);
    if (s_query->parsed()) return cmd_query(query);
    if (s_loc->parsed()) return cmd_localize(loc);
    if (s_eval->parsed()) return cmd_eval(ev);
    if (s_te->parsed()) return cmd_train_encoder(te);
    if (s_tc->parsed()) return cmd_train_codebook(tc);
  } catch (const vpn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error (io): %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
