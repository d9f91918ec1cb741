#pragma once

// Raw asset files ("VPNA") and the JSONL corpus manifest.
//
// VPNA layout, little-endian:
//   "VPNA" u32 version
//   string id (u32 length + bytes)
//   u32 fps, u32 sample_rate, u32 frame_count, u32 height, u32 width, u64 sample_count
//   f32[frame_count * height * width * 3] frames (HWC, frame-major)
//   f32[sample_count] waveform

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpn/detail/binary_io.hpp"
#include "vpn/media.hpp"

namespace vpn {

inline constexpr std::uint32_t kAssetVersion = 1;

inline void write_asset(const VideoAsset& a, const std::filesystem::path& path) {
  validate(a, false);
  detail::ByteWriter w;
  w.put_bytes("VPNA");
  w.put(kAssetVersion);
  w.put_string(a.id);
  w.put(static_cast<std::uint32_t>(a.fps));
  w.put(static_cast<std::uint32_t>(a.sample_rate));
  w.put(static_cast<std::uint32_t>(a.frames.size()));
  w.put(static_cast<std::uint32_t>(a.height()));
  w.put(static_cast<std::uint32_t>(a.width()));
  w.put(static_cast<std::uint64_t>(a.waveform.size()));
  for (const auto& f : a.frames) w.put_span<float>(f.data);
  w.put_span<float>(a.waveform);
  w.write_file(path);
}

inline VideoAsset read_asset(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("VPNA", kAssetVersion);
  VideoAsset a;
  a.id = r.get_string();
  a.fps = static_cast<int>(r.get<std::uint32_t>());
  a.sample_rate = static_cast<int>(r.get<std::uint32_t>());
  const auto n_frames = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  const auto n_samples = r.get<std::uint64_t>();
  const std::uint64_t frame_bytes = std::uint64_t{h} * w * 3 * sizeof(float);
  if (frame_bytes * n_frames + n_samples * sizeof(float) != r.remaining())
    fail(ErrorCode::corruption, "asset payload size does not match header: " + path.string());
  a.frames.reserve(n_frames);
  for (std::uint32_t i = 0; i < n_frames; ++i) {
    Frame f(static_cast<int>(h), static_cast<int>(w));
    r.get_into<float>(f.data);
    a.frames.push_back(std::move(f));
  }
  a.waveform.resize(n_samples);
  r.get_into<float>(a.waveform);
  return a;
}

struct ManifestEntry {
  std::string id;
  std::string path;
  int fps = 0;
  int sample_rate = 0;
  double duration_s = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

inline nlohmann::ordered_json to_json(const ManifestEntry& e) {
  return {{"id", e.id}, {"path", e.path}, {"fps", e.fps}, {"sample_rate", e.sample_rate},
          {"duration_s", e.duration_s}};
}

inline void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write manifest: " + path.string());
  for (const auto& e : entries) out << to_json(e).dump() << '\n';
  if (!out) fail(ErrorCode::io, "manifest write failed: " + path.string());
}

/// Relative asset paths are resolved against the manifest's directory.
inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read manifest: " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.path = j.at("path").get<std::string>();
      e.fps = j.at("fps").get<int>();
      e.sample_rate = j.at("sample_rate").get<int>();
      e.duration_s = j.at("duration_s").get<double>();
      if (std::filesystem::path(e.path).is_relative()) e.path = (path.parent_path() / e.path).string();
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::format, path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return entries;
}

}  // namespace vpn
