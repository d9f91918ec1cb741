#pragma once

// Per aggregation window (AW) descriptors and the "VPND" descriptor file.
//
// VPND layout, little-endian:
//   "VPND" u32 version, u8 modality (0 visual, 1 audio, 2 fused),
//   u32 dim, u32 count, f64 t0, f64 stride, f64 aw_len,
//   f32[count * dim]
// The video id is not stored; read_descriptors takes it from the file stem.

#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpn/detail/binary_io.hpp"
#include "vpn/encoders.hpp"
#include "vpn/media.hpp"

namespace vpn {

enum class Modality : std::uint8_t { visual = 0, audio = 1, fused = 2 };

constexpr std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::visual: return "visual";
    case Modality::audio: return "audio";
    case Modality::fused: return "fused";
  }
  return "?";
}

inline std::optional<Modality> modality_from_string(std::string_view s) {
  if (s == "visual") return Modality::visual;
  if (s == "audio") return Modality::audio;
  if (s == "fused") return Modality::fused;
  return std::nullopt;
}

inline constexpr int kLogicalFps = 16;
inline constexpr int kFramesPerAw = 16;
inline constexpr double kDefaultAwStride = 0.5;
inline constexpr double kAwLen = 1.0;

struct DescriptorSet {
  std::string video_id;
  Modality modality = Modality::visual;
  int dim = kDefaultDim;
  double t0_s = 0.0;
  double aw_stride_s = kDefaultAwStride;
  double aw_len_s = kAwLen;
  std::vector<float> data;  ///< count x dim, row-major

  std::size_t count() const noexcept { return dim > 0 ? data.size() / static_cast<std::size_t>(dim) : 0; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, static_cast<std::size_t>(dim)}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * dim, static_cast<std::size_t>(dim)}; }
  double start_s(std::size_t i) const { return t0_s + static_cast<double>(i) * aw_stride_s; }

  friend bool operator==(const DescriptorSet&, const DescriptorSet&) = default;
};

/// Number of whole windows of `aw_len` at `stride` that fit in `duration`.
inline std::size_t aw_count(double duration_s, double stride_s, double aw_len_s = kAwLen) {
  constexpr double kEps = 1e-9;
  if (duration_s + kEps < aw_len_s) return 0;
  return static_cast<std::size_t>(std::floor((duration_s - aw_len_s) / stride_s + kEps)) + 1;
}

namespace detail {

inline void check_stride(double s_f) {
  require(std::isfinite(s_f) && s_f > 0, ErrorCode::parameter, "AW stride must be positive");
}

/// Index of the asset frame nearest to logical frame `k` at `logical_fps`.
inline std::size_t nearest_frame(std::size_t k, int logical_fps, int fps, std::size_t n_frames) {
  const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(k) * fps / logical_fps));
  return std::min(idx, n_frames - 1);
}

}  // namespace detail

/// Encodes the frames seen at `logical_fps` (nearest-frame resampling);
/// returns one embedding per logical frame.
inline std::vector<std::vector<float>> frame_embeddings(const VideoAsset& asset, const EncoderSpec& enc,
                                                        int logical_fps = kLogicalFps) {
  require(!asset.frames.empty(), ErrorCode::short_input, "asset has no frames");
  const auto n_logical =
      static_cast<std::size_t>(std::floor(asset.duration_s() * logical_fps + 1e-9));
  std::vector<std::vector<float>> out;
  out.reserve(n_logical);
  for (std::size_t k = 0; k < n_logical; ++k)
    out.push_back(encode_frame(
        asset.frames[detail::nearest_frame(k, logical_fps, asset.fps, asset.frames.size())], enc));
  return out;
}

/// One descriptor per 1 s AW at stride `s_f`: the normalised mean of the 16
/// per-frame embeddings sampled at 16 fps inside the window.
inline DescriptorSet extract_visual(const VideoAsset& asset, const EncoderSpec& enc,
                                    double s_f = kDefaultAwStride) {
  detail::check_stride(s_f);
  check(enc);
  const std::size_t n = aw_count(asset.duration_s(), s_f);
  require(n > 0, ErrorCode::short_input, "visual stream shorter than one aggregation window");

  DescriptorSet ds;
  ds.video_id = asset.id;
  ds.modality = Modality::visual;
  ds.dim = enc.dim;
  ds.aw_stride_s = s_f;
  ds.data.assign(n * static_cast<std::size_t>(enc.dim), 0.0f);

  std::vector<std::optional<std::vector<float>>> cache;
  for (std::size_t j = 0; j < n; ++j) {
    const auto first = static_cast<std::size_t>(std::llround(static_cast<double>(j) * s_f * kLogicalFps));
    std::vector<double> acc(static_cast<std::size_t>(enc.dim), 0.0);
    for (std::size_t t = 0; t < kFramesPerAw; ++t) {
      const std::size_t k = first + t;
      if (cache.size() <= k) cache.resize(k + 1);
      if (!cache[k])
        cache[k] = encode_frame(asset.frames[detail::nearest_frame(k, kLogicalFps, asset.fps, asset.frames.size())],
                                enc);
      for (int d = 0; d < enc.dim; ++d) acc[d] += (*cache[k])[d];
    }
    auto out = ds.row(j);
    for (int d = 0; d < enc.dim; ++d) out[d] = static_cast<float>(acc[d] / kFramesPerAw);
    normalize(out);
  }
  return ds;
}

/// One descriptor per 1 s audio window at stride `s_f`, in step with the
/// visual windows.
inline DescriptorSet extract_audio(const VideoAsset& asset, const EncoderSpec& enc,
                                   double s_f = kDefaultAwStride) {
  detail::check_stride(s_f);
  check(enc);
  require(asset.sample_rate > 0, ErrorCode::parameter, "sample rate must be positive");
  const std::size_t n = aw_count(asset.audio_duration_s(), s_f);
  require(n > 0, ErrorCode::short_input, "audio stream shorter than one second");

  DescriptorSet ds;
  ds.video_id = asset.id;
  ds.modality = Modality::audio;
  ds.dim = enc.dim;
  ds.aw_stride_s = s_f;
  ds.data.assign(n * static_cast<std::size_t>(enc.dim), 0.0f);
  const auto sr = static_cast<std::size_t>(asset.sample_rate);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t start = std::min(asset.waveform.size() - sr,
                                       static_cast<std::size_t>(std::llround(static_cast<double>(j) * s_f * sr)));
    const auto v = encode_audio_window(std::span<const float>(asset.waveform).subspan(start, sr),
                                       asset.sample_rate, enc);
    std::copy(v.begin(), v.end(), ds.row(j).begin());
  }
  return ds;
}

inline constexpr std::uint32_t kDescriptorVersion = 1;

inline void write_descriptors(const DescriptorSet& ds, const std::filesystem::path& path) {
  require(ds.dim > 0 && ds.data.size() % static_cast<std::size_t>(ds.dim) == 0, ErrorCode::shape,
          "descriptor payload is not a whole number of vectors");
  detail::ByteWriter w;
  w.put_bytes("VPND");
  w.put(kDescriptorVersion);
  w.put(static_cast<std::uint8_t>(ds.modality));
  w.put(static_cast<std::uint32_t>(ds.dim));
  w.put(static_cast<std::uint32_t>(ds.count()));
  w.put(ds.t0_s);
  w.put(ds.aw_stride_s);
  w.put(ds.aw_len_s);
  w.put_span<float>(ds.data);
  w.write_file(path);
}

inline DescriptorSet read_descriptors(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("VPND", kDescriptorVersion);
  DescriptorSet ds;
  ds.video_id = path.stem().string();
  const auto mod = r.get<std::uint8_t>();
  if (mod > 2) fail(ErrorCode::format, "unknown modality tag " + std::to_string(mod));
  ds.modality = static_cast<Modality>(mod);
  ds.dim = static_cast<int>(r.get<std::uint32_t>());
  const auto count = r.get<std::uint32_t>();
  ds.t0_s = r.get<double>();
  ds.aw_stride_s = r.get<double>();
  ds.aw_len_s = r.get<double>();
  if (ds.dim <= 0) fail(ErrorCode::corruption, "zero descriptor dimension");
  if (std::uint64_t{count} * static_cast<std::uint64_t>(ds.dim) * sizeof(float) != r.remaining())
    fail(ErrorCode::corruption, "descriptor count does not match payload size: " + path.string());
  ds.data.resize(static_cast<std::size_t>(count) * static_cast<std::size_t>(ds.dim));
  r.get_into<float>(ds.data);
  return ds;
}

/// Ingests descriptors produced elsewhere for the `external` encoder kind.
inline DescriptorSet read_external(const std::filesystem::path& path, const EncoderSpec& enc) {
  auto ds = read_descriptors(path);
  require(ds.dim == enc.dim, ErrorCode::shape, "external descriptors do not match declared dimension");
  return ds;
}

}  // namespace vpn
