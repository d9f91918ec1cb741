#pragma once

// Declarative JSON configuration. A user file is merged over the defaults,
// then `key.path=value` overrides are applied. Unknown keys are rejected.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpn/eval.hpp"

namespace vpn {

inline nlohmann::json default_config() {
  return nlohmann::json::parse(R"({
    "corpus": {"seed": 7, "count": 500, "duration_s": 10.0, "fps": 16, "sample_rate": 16000,
               "height": 36, "width": 48},
    "index": {"k": 1024, "max_iters": 25, "kmeans_seed": 11, "chunk_len_s": 10.0, "chunk_stride_s": 5.0,
              "aw_stride_s": 0.5, "models": ["visual", "audio"]},
    "query": {"count": 100, "seed": 2024, "trunc_min": 0.3, "trunc_max": 1.0, "shortlist": 200},
    "fusion": {"mode": "late", "weights": [1.0, 1.0], "learned_weights": ""},
    "eval": {"runs": ["visual", "audio", "late", "late:no-rerank", "late:no-idf-no-rerank"],
             "localization": true},
    "train": {"epochs": 20, "learning_rate": 0.5, "seed": 1, "groups": 64, "views": 3,
              "temperature": 0.1, "out_dim": 256},
    "paths": {"data_dir": "data", "index_dir": "index", "report": "report"}
  })");
}

namespace detail {

inline void reject_unknown(const nlohmann::json& defaults, const nlohmann::json& user, const std::string& prefix) {
  require(user.is_object(), ErrorCode::configuration, "config section '" + prefix + "' must be an object");
  for (const auto& [k, v] : user.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    require(defaults.contains(k), ErrorCode::configuration, "unknown config key '" + key + "'");
    if (defaults[k].is_object()) reject_unknown(defaults[k], v, key);
  }
}

}  // namespace detail

/// Parses `value` as JSON when possible, otherwise keeps it as a string.
inline nlohmann::json parse_override_value(const std::string& value) {
  try {
    return nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    return value;
  }
}

/// Applies `section.key=value`; the key must exist in the defaults.
inline void apply_override(nlohmann::json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, ErrorCode::configuration,
          "override must look like key.path=value: " + assignment);
  std::string pointer = "/" + assignment.substr(0, eq);
  std::replace(pointer.begin(), pointer.end(), '.', '/');
  const nlohmann::json::json_pointer ptr(pointer);
  require(default_config().contains(ptr), ErrorCode::configuration,
          "unknown config key '" + assignment.substr(0, eq) + "'");
  cfg[ptr] = parse_override_value(assignment.substr(eq + 1));
}

inline nlohmann::json load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  auto cfg = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::configuration, "cannot open config " + path.string());
    nlohmann::json user;
    try {
      user = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::configuration, "config " + path.string() + ": " + e.what());
    }
    detail::reject_unknown(cfg, user, "");
    cfg.merge_patch(user);
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

/// Typed view of a merged configuration. Type mismatches are configuration errors.
template <typename T>
T config_value(const nlohmann::json& cfg, const std::string& dotted) {
  std::string pointer = "/" + dotted;
  std::replace(pointer.begin(), pointer.end(), '.', '/');
  try {
    return cfg.at(nlohmann::json::json_pointer(pointer)).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::configuration, "config key '" + dotted + "': " + e.what());
  }
}

inline CorpusParams corpus_params(const nlohmann::json& cfg) {
  CorpusParams p;
  p.seed = config_value<std::uint64_t>(cfg, "corpus.seed");
  p.count = config_value<int>(cfg, "corpus.count");
  p.duration_s = config_value<double>(cfg, "corpus.duration_s");
  p.fps = config_value<int>(cfg, "corpus.fps");
  p.sample_rate = config_value<int>(cfg, "corpus.sample_rate");
  p.height = config_value<int>(cfg, "corpus.height");
  p.width = config_value<int>(cfg, "corpus.width");
  try {
    check(p);
  } catch (const Error& e) {
    fail(ErrorCode::configuration, e.what());
  }
  return p;
}

inline EngineParams engine_params(const nlohmann::json& cfg) {
  EngineParams p;
  p.kmeans.k = config_value<int>(cfg, "index.k");
  p.kmeans.max_iters = config_value<int>(cfg, "index.max_iters");
  p.kmeans.seed = config_value<std::uint64_t>(cfg, "index.kmeans_seed");
  p.chunk.chunk_len_s = config_value<double>(cfg, "index.chunk_len_s");
  p.chunk.chunk_stride_s = config_value<double>(cfg, "index.chunk_stride_s");
  p.chunk.aw_stride_s = config_value<double>(cfg, "index.aw_stride_s");
  p.visual = p.audio = false;
  for (const auto& m : config_value<std::vector<std::string>>(cfg, "index.models")) {
    if (m == "visual") p.visual = true;
    else if (m == "audio") p.audio = true;
    else if (m == "early") p.early = true;
    else if (m == "learned") p.learned = true;
    else fail(ErrorCode::configuration, "unknown model '" + m + "'");
  }
  const auto ep = config_value<std::string>(cfg, "fusion.learned_weights");
  if (!ep.empty()) p.learned_weights = read_weights(ep);
  require(!p.learned || p.learned_weights, ErrorCode::configuration,
          "model 'learned' needs fusion.learned_weights");
  try {
    check(p.chunk);
  } catch (const Error& e) {
    fail(ErrorCode::configuration, e.what());
  }
  return p;
}

inline std::pair<double, double> late_weights(const nlohmann::json& cfg) {
  const auto w = config_value<std::vector<double>>(cfg, "fusion.weights");
  require(w.size() == 2 && w[0] >= 0 && w[1] >= 0, ErrorCode::configuration,
          "fusion.weights must be two non-negative numbers");
  return {w[0], w[1]};
}

inline EvalSettings eval_settings(const nlohmann::json& cfg) {
  EvalSettings s;
  s.corpus = corpus_params(cfg);
  s.engine = engine_params(cfg);
  s.query_count = config_value<int>(cfg, "query.count");
  s.query_seed = config_value<std::uint64_t>(cfg, "query.seed");
  s.trunc_min = config_value<double>(cfg, "query.trunc_min");
  s.trunc_max = config_value<double>(cfg, "query.trunc_max");
  s.shortlist = config_value<std::size_t>(cfg, "query.shortlist");
  s.late_weights = late_weights(cfg);
  s.runs.clear();
  for (const auto& r : config_value<std::vector<std::string>>(cfg, "eval.runs")) s.runs.push_back(parse_run(r));
  s.localization = config_value<bool>(cfg, "eval.localization");
  check(s);
  return s;
}

}  // namespace vpn
