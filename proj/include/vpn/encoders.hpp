#pragma once

// Deterministic baseline encoders standing in for learned frame and audio
// networks, plus the learned linear head that can sit on top of them.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vpn/error.hpp"
#include "vpn/linalg.hpp"
#include "vpn/media.hpp"
#include "vpn/spectrogram.hpp"

namespace vpn {

inline constexpr int kDefaultDim = 256;
inline constexpr int kAnalysisSize = 64;
inline constexpr int kGrid = 4;
inline constexpr int kOrientBins = 4;
inline constexpr int kCellFeatures = 6 + kOrientBins;
inline constexpr int kVisualFeatureDim = kGrid * kGrid * kCellFeatures + 1;
inline constexpr int kAudioFeatureDim = kMelBands * kTimeSlices + 1;
// Constant last feature: keeps featureless input (flat frame, silence) on a
// fixed direction instead of the zero vector.
inline constexpr double kBiasFeature = 1e-3;

inline constexpr std::uint64_t kVisualProjectionSeed = 0x56504E5649535531ULL;
inline constexpr std::uint64_t kAudioProjectionSeed = 0x56504E4155444931ULL;

static_assert(kGrid % 2 == 0, "mirror pooling pairs grid columns");

namespace detail {

// Bilinear resample onto the fixed analysis grid.
inline std::vector<double> resize_rgb(const Frame& f, int size) {
  std::vector<double> out(static_cast<std::size_t>(size) * size * 3);
  const double sy = static_cast<double>(f.height) / size, sx = static_cast<double>(f.width) / size;
  for (int y = 0; y < size; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, f.height - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, f.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < size; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, f.width - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, f.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = f.at(y0, x0, c) * (1 - wx) + f.at(y0, x1, c) * wx;
        const double bot = f.at(y1, x0, c) * (1 - wx) + f.at(y1, x1, c) * wx;
        out[(static_cast<std::size_t>(y) * size + x) * 3 + c] = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Raw frame features before projection: per-cell colour moments and folded
/// gradient-orientation histograms on a 4x4 grid of the photometrically
/// normalised frame, with mirrored columns pooled as (sum, |difference|) so
/// the result does not change under horizontal flips.
inline std::vector<double> visual_features(const Frame& frame) {
  require(!frame.empty() && frame.data.size() == static_cast<std::size_t>(frame.height) * frame.width * 3,
          ErrorCode::shape, "empty or malformed frame");
  constexpr int n = kAnalysisSize;
  auto img = detail::resize_rgb(frame, n);

  double mu = 0, mu2 = 0;
  std::vector<double> lum(static_cast<std::size_t>(n) * n);
  for (std::size_t i = 0; i < lum.size(); ++i) {
    lum[i] = (img[i * 3] + img[i * 3 + 1] + img[i * 3 + 2]) / 3.0;
    mu += lum[i];
    mu2 += lum[i] * lum[i];
  }
  mu /= static_cast<double>(lum.size());
  const double sigma = std::sqrt(std::max(0.0, mu2 / static_cast<double>(lum.size()) - mu * mu));
  const double scale = 1.0 / (sigma + 0.02);
  for (double& v : img) v = (v - mu) * scale;
  for (double& v : lum) v = (v - mu) * scale;

  constexpr int cell = n / kGrid;
  std::array<std::array<std::array<double, kCellFeatures>, kGrid>, kGrid> cells{};
  for (int gy = 0; gy < kGrid; ++gy)
    for (int gx = 0; gx < kGrid; ++gx) {
      auto& cf = cells[gy][gx];
      double sum[3] = {}, sq[3] = {};
      for (int y = gy * cell; y < (gy + 1) * cell; ++y)
        for (int x = gx * cell; x < (gx + 1) * cell; ++x) {
          for (int c = 0; c < 3; ++c) {
            const double v = img[(static_cast<std::size_t>(y) * n + x) * 3 + c];
            sum[c] += v;
            sq[c] += v * v;
          }
          const int xl = std::max(x - 1, 0), xr = std::min(x + 1, n - 1);
          const int yu = std::max(y - 1, 0), yd = std::min(y + 1, n - 1);
          const double gxv = lum[static_cast<std::size_t>(y) * n + xr] - lum[static_cast<std::size_t>(y) * n + xl];
          const double gyv = lum[static_cast<std::size_t>(yd) * n + x] - lum[static_cast<std::size_t>(yu) * n + x];
          const double mag = std::hypot(gxv, gyv);
          if (mag <= 0) continue;
          // Orientation folded into [0, pi/2]; soft-binned between neighbours.
          const double pos = std::atan2(std::abs(gyv), std::abs(gxv)) / (std::numbers::pi / 2) * (kOrientBins - 1);
          const int b0 = std::min(static_cast<int>(pos), kOrientBins - 1);
          const int b1 = std::min(b0 + 1, kOrientBins - 1);
          const double w1 = pos - b0;
          cf[6 + b0] += mag * (1 - w1);
          cf[6 + b1] += mag * w1;
        }
      constexpr double count = cell * cell;
      for (int c = 0; c < 3; ++c) {
        const double m = sum[c] / count;
        cf[c] = m;
        cf[3 + c] = std::sqrt(std::max(0.0, sq[c] / count - m * m));
      }
      for (int b = 0; b < kOrientBins; ++b) cf[6 + b] /= count;
    }

  std::vector<double> feat;
  feat.reserve(kVisualFeatureDim);
  for (int gy = 0; gy < kGrid; ++gy)
    for (int gx = 0; gx < kGrid / 2; ++gx) {
      const auto& a = cells[gy][gx];
      const auto& b = cells[gy][kGrid - 1 - gx];
      for (int k = 0; k < kCellFeatures; ++k) feat.push_back(a[k] + b[k]);
      for (int k = 0; k < kCellFeatures; ++k) feat.push_back(std::abs(a[k] - b[k]));
    }
  feat.push_back(kBiasFeature);
  return feat;
}

namespace detail {

inline std::vector<float> project_normalize(std::span<const double> feat, std::uint64_t seed, int dim) {
  require(dim > 0, ErrorCode::parameter, "descriptor dimension must be positive");
  const auto proj = random_orthonormal(seed, dim, static_cast<int>(feat.size()));
  const Eigen::Map<const Eigen::VectorXd> x(feat.data(), static_cast<Eigen::Index>(feat.size()));
  const Eigen::VectorXd y = (*proj) * x;
  std::vector<float> out(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) out[i] = static_cast<float>(y[i]);
  if (!normalize(out)) {
    std::fill(out.begin(), out.end(), 0.0f);
    out[0] = 1.0f;
  }
  return out;
}

}  // namespace detail

inline std::vector<float> baseline_visual_encode(const Frame& frame, int dim = kDefaultDim) {
  const auto feat = visual_features(frame);
  return detail::project_normalize(feat, kVisualProjectionSeed, dim);
}

/// Encodes exactly one second of audio (`sample_rate` samples).
inline std::vector<float> baseline_audio_encode(std::span<const float> window, int sample_rate,
                                                int dim = kDefaultDim) {
  require(static_cast<int>(window.size()) == sample_rate, ErrorCode::shape,
          "audio window must be exactly sample_rate samples");
  const auto img = log_mel_image(window, sample_rate);
  std::vector<double> feat(img.begin(), img.end());
  feat.push_back(kBiasFeature);
  return detail::project_normalize(feat, kAudioProjectionSeed, dim);
}

enum class EncoderKind { baseline_visual, baseline_audio, linear_learned, external };

constexpr std::string_view to_string(EncoderKind k) noexcept {
  switch (k) {
    case EncoderKind::baseline_visual: return "baseline_visual";
    case EncoderKind::baseline_audio: return "baseline_audio";
    case EncoderKind::linear_learned: return "linear_learned";
    case EncoderKind::external: return "external";
  }
  return "?";
}

/// Which encoder produces descriptors. `linear_learned` applies `weights`
/// (dim x base_dim) to the baseline encoder of the modality being extracted.
struct EncoderSpec {
  EncoderKind kind = EncoderKind::baseline_visual;
  std::optional<RowMatrixF> weights;
  int dim = kDefaultDim;

  static EncoderSpec visual(int dim = kDefaultDim) { return {EncoderKind::baseline_visual, std::nullopt, dim}; }
  static EncoderSpec audio(int dim = kDefaultDim) { return {EncoderKind::baseline_audio, std::nullopt, dim}; }
  static EncoderSpec learned(RowMatrixF w) {
    const int d = static_cast<int>(w.rows());
    return {EncoderKind::linear_learned, std::move(w), d};
  }
};

inline void check(const EncoderSpec& e) {
  require(e.dim > 0, ErrorCode::parameter, "encoder dim must be positive");
  if (e.kind == EncoderKind::linear_learned) {
    require(e.weights.has_value(), ErrorCode::configuration, "linear_learned encoder needs weights");
    require(e.weights->rows() == e.dim && e.weights->cols() > 0, ErrorCode::shape,
            "linear_learned weights must have dim rows");
  }
}

namespace detail {

inline std::vector<float> apply_learned(const RowMatrixF& w, std::span<const float> base) {
  require(static_cast<Eigen::Index>(base.size()) == w.cols(), ErrorCode::shape, "weights/base dimension mismatch");
  const Eigen::Map<const Eigen::VectorXf> x(base.data(), static_cast<Eigen::Index>(base.size()));
  const Eigen::VectorXf y = w * x;
  std::vector<float> out(y.data(), y.data() + y.size());
  if (!normalize(out)) {
    std::fill(out.begin(), out.end(), 0.0f);
    out[0] = 1.0f;
  }
  return out;
}

}  // namespace detail

inline std::vector<float> encode_frame(const Frame& frame, const EncoderSpec& enc) {
  check(enc);
  switch (enc.kind) {
    case EncoderKind::baseline_visual: return baseline_visual_encode(frame, enc.dim);
    case EncoderKind::linear_learned:
      return detail::apply_learned(*enc.weights,
                                   baseline_visual_encode(frame, static_cast<int>(enc.weights->cols())));
    case EncoderKind::baseline_audio: fail(ErrorCode::modality, "audio encoder applied to a frame");
    case EncoderKind::external: fail(ErrorCode::configuration, "external descriptors are read from files");
  }
  return {};
}

inline std::vector<float> encode_audio_window(std::span<const float> window, int sample_rate,
                                              const EncoderSpec& enc) {
  check(enc);
  switch (enc.kind) {
    case EncoderKind::baseline_audio: return baseline_audio_encode(window, sample_rate, enc.dim);
    case EncoderKind::linear_learned:
      return detail::apply_learned(
          *enc.weights, baseline_audio_encode(window, sample_rate, static_cast<int>(enc.weights->cols())));
    case EncoderKind::baseline_visual: fail(ErrorCode::modality, "visual encoder applied to audio");
    case EncoderKind::external: fail(ErrorCode::configuration, "external descriptors are read from files");
  }
  return {};
}

}  // namespace vpn
