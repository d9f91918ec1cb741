#pragma once

// Synthetic audio-visual media and the benign transformations applied to
// query videos.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpn/error.hpp"

namespace vpn {

/// H x W x 3 image, interleaved channels, values in [0, 1].
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Frame() = default;
  Frame(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  bool empty() const noexcept { return height <= 0 || width <= 0 || data.empty(); }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct VideoAsset {
  std::string id;
  int fps = 16;
  int sample_rate = 16000;
  std::vector<Frame> frames;
  std::vector<float> waveform;

  /// Duration is carried by the visual stream. Audio perturbations such as
  /// time stretching may leave the waveform at a different length.
  double duration_s() const { return fps > 0 ? static_cast<double>(frames.size()) / fps : 0.0; }
  double audio_duration_s() const {
    return sample_rate > 0 ? static_cast<double>(waveform.size()) / sample_rate : 0.0;
  }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int width() const { return frames.empty() ? 0 : frames.front().width; }

  friend bool operator==(const VideoAsset&, const VideoAsset&) = default;
};

/// Checks the structural invariants of an unperturbed asset: positive rates,
/// a single frame shape, in-range samples, and matching stream lengths.
inline void validate(const VideoAsset& a, bool require_synced_audio = true) {
  require(a.fps > 0 && a.sample_rate > 0, ErrorCode::parameter, "asset rates must be positive");
  require(!a.frames.empty(), ErrorCode::shape, "asset has no frames");
  const int h = a.frames.front().height, w = a.frames.front().width;
  require(h > 0 && w > 0, ErrorCode::shape, "empty frame");
  for (const auto& f : a.frames) {
    require(f.height == h && f.width == w, ErrorCode::shape, "frames differ in shape");
    require(f.data.size() == static_cast<std::size_t>(h) * w * 3, ErrorCode::shape, "frame payload size");
  }
  if (require_synced_audio) {
    const auto expected = static_cast<std::size_t>(std::llround(a.duration_s() * a.sample_rate));
    require(a.waveform.size() == expected, ErrorCode::shape, "waveform length does not match duration");
  }
}

// ---------------------------------------------------------------------------
// Seeding

/// splitmix64 finalizer; derives independent sub-seeds from (seed, index).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index = 0) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// ---------------------------------------------------------------------------
// Corpus generation

struct CorpusParams {
  std::uint64_t seed = 7;
  int count = 1;
  double duration_s = 10.0;
  int fps = 16;
  int sample_rate = 16000;
  int height = 36;
  int width = 48;
};

inline void check(const CorpusParams& p) {
  require(p.count >= 1, ErrorCode::parameter, "count must be >= 1");
  require(std::isfinite(p.duration_s) && p.duration_s >= 1.0, ErrorCode::parameter, "duration_s must be >= 1");
  require(p.fps >= 4, ErrorCode::parameter, "fps must be >= 4");
  require(p.sample_rate >= 8000, ErrorCode::parameter, "sample_rate must be >= 8000");
  require(p.height >= 8 && p.width >= 8, ErrorCode::parameter, "frame size must be at least 8x8");
}

inline std::string asset_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "vid%05d", index);
  return buf;
}

namespace detail {

struct Wave {
  double kx, ky, phase, drift, amp;
};

struct Shape {
  bool disc;
  double half_w, half_h;
  double x0, y0, vx, vy;
  float color[3];
};

// Reflects a coordinate into [lo, hi] as if bouncing off the walls.
inline double bounce(double v, double lo, double hi) {
  const double span = hi - lo;
  if (span <= 0) return lo;
  double t = std::fmod(v - lo, 2 * span);
  if (t < 0) t += 2 * span;
  return lo + (t <= span ? t : 2 * span - t);
}

inline std::vector<Frame> synth_frames(Rng& rng, int n_frames, int fps, int h, int w) {
  using std::numbers::pi;
  float base[3];
  std::vector<Wave> waves[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = static_cast<float>(uniform(rng, 0.3, 0.7));
    for (int k = 0; k < 3; ++k)
      waves[c].push_back({uniform(rng, 0.5, 2.5) * 2 * pi / w, uniform(rng, 0.5, 2.5) * 2 * pi / h,
                          uniform(rng, 0, 2 * pi), uniform(rng, -0.6, 0.6), uniform(rng, 0.04, 0.12)});
  }
  std::vector<Shape> shapes(static_cast<std::size_t>(uniform_int(rng, 2, 4)));
  for (auto& s : shapes) {
    s.disc = uniform_int(rng, 0, 1) == 1;
    s.half_w = uniform(rng, 0.08, 0.2) * w;
    s.half_h = s.disc ? s.half_w : uniform(rng, 0.08, 0.2) * h;
    s.x0 = uniform(rng, 0, w);
    s.y0 = uniform(rng, 0, h);
    s.vx = uniform(rng, -0.15, 0.15) * w;
    s.vy = uniform(rng, -0.15, 0.15) * h;
    for (float& c : s.color) c = static_cast<float>(uniform(rng, 0.1, 0.9));
  }

  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(n_frames));
  std::vector<double> cx(w), sx(w), cy(h), sy(h);
  for (int f = 0; f < n_frames; ++f) {
    const double t = static_cast<double>(f) / fps;
    Frame frame(h, w);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) frame.at(y, x, c) = base[c];
      for (const auto& wv : waves[c]) {
        // cos(a + b) split into separable row and column factors.
        const double ph = wv.phase + wv.drift * t;
        for (int x = 0; x < w; ++x) {
          cx[x] = std::cos(wv.kx * x + ph);
          sx[x] = std::sin(wv.kx * x + ph);
        }
        for (int y = 0; y < h; ++y) {
          cy[y] = std::cos(wv.ky * y);
          sy[y] = std::sin(wv.ky * y);
        }
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            frame.at(y, x, c) += static_cast<float>(wv.amp * (cx[x] * cy[y] - sx[x] * sy[y]));
      }
    }
    for (const auto& s : shapes) {
      const double px = bounce(s.x0 + s.vx * t, 0, w - 1);
      const double py = bounce(s.y0 + s.vy * t, 0, h - 1);
      const int y0 = std::max(0, static_cast<int>(std::floor(py - s.half_h)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(py + s.half_h)));
      const int x0 = std::max(0, static_cast<int>(std::floor(px - s.half_w)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(px + s.half_w)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const double dx = (x - px) / s.half_w, dy = (y - py) / s.half_h;
          const bool inside = s.disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
          if (inside)
            for (int c = 0; c < 3; ++c) frame.at(y, x, c) = s.color[c];
        }
    }
    for (float& v : frame.data) v = std::clamp(v, 0.0f, 1.0f);
    frames.push_back(std::move(frame));
  }
  return frames;
}

// RBJ band-pass biquad, constant 0 dB peak gain.
inline void bandpass(std::vector<double>& x, double sr, double center, double q) {
  const double w0 = 2 * std::numbers::pi * center / sr;
  const double alpha = std::sin(w0) / (2 * q);
  const double a0 = 1 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2 * std::cos(w0) / a0, a2 = (1 - alpha) / a0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (double& v : x) {
    const double y = b0 * v + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

inline std::vector<float> synth_audio(Rng& rng, std::size_t n, int sr) {
  const int n_tones = uniform_int(rng, 3, 6);
  std::vector<double> mix(n, 0.0);
  const double ramp = 0.02 * sr;
  for (int k = 0; k < n_tones; ++k) {
    const double freq = std::exp(uniform(rng, std::log(100.0), std::log(std::min(4000.0, 0.4 * sr))));
    const double amp = uniform(rng, 0.3, 1.0);
    // On/off gating in segments of 0.4-2 s gives each tone a temporal pattern.
    std::vector<double> gate(n, 0.0);
    bool on = uniform_int(rng, 0, 1) == 1 || k == 0;
    for (std::size_t start = 0; start < n;) {
      const auto len = static_cast<std::size_t>(uniform(rng, 0.4, 2.0) * sr);
      const std::size_t end = std::min(n, start + len);
      if (on)
        for (std::size_t i = start; i < end; ++i) {
          const double up = std::min(1.0, (i - start + 1) / ramp);
          const double down = std::min(1.0, (end - i) / ramp);
          gate[i] = std::min(up, down);
        }
      on = k == 0 ? true : !on;
      start = end;
    }
    const std::complex<double> step = std::polar(1.0, 2 * std::numbers::pi * freq / sr);
    std::complex<double> phasor = std::polar(1.0, uniform(rng, 0, 2 * std::numbers::pi));
    for (std::size_t i = 0; i < n; ++i) {
      mix[i] += amp * gate[i] * phasor.imag();
      phasor *= step;
      if ((i & 1023) == 0) phasor /= std::abs(phasor);
    }
  }
  double tone_power = 0;
  for (double v : mix) tone_power += v * v;
  tone_power /= static_cast<double>(n);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(n);
  for (double& v : noise) v = gauss(rng);
  bandpass(noise, sr, uniform(rng, 200.0, std::min(3000.0, 0.35 * sr)), uniform(rng, 0.7, 2.0));
  double noise_power = 0;
  for (double v : noise) noise_power += v * v;
  noise_power /= static_cast<double>(n);
  const double noise_gain = noise_power > 0 ? std::sqrt(tone_power * 0.03 / noise_power) : 0.0;  // -15 dB

  double peak = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mix[i] += noise_gain * noise[i];
    peak = std::max(peak, std::abs(mix[i]));
  }
  const double scale = peak > 0 ? 0.5 / peak : 0.0;
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(mix[i] * scale);
  return out;
}

}  // namespace detail

/// Generates asset `index` of the corpus described by `p`. Assets depend only
/// on (seed, index), so a corpus can be streamed one asset at a time.
inline VideoAsset gen_asset(const CorpusParams& p, int index) {
  check(p);
  require(index >= 0, ErrorCode::parameter, "negative asset index");
  Rng rng(mix_seed(p.seed, static_cast<std::uint64_t>(index)));
  VideoAsset a;
  a.id = asset_id(index);
  a.fps = p.fps;
  a.sample_rate = p.sample_rate;
  const int n_frames = static_cast<int>(std::llround(p.fps * p.duration_s));
  a.frames = detail::synth_frames(rng, n_frames, p.fps, p.height, p.width);
  const auto n_samples = static_cast<std::size_t>(std::llround(a.duration_s() * p.sample_rate));
  a.waveform = detail::synth_audio(rng, n_samples, p.sample_rate);
  return a;
}

inline std::vector<VideoAsset> gen_corpus(const CorpusParams& p) {
  check(p);
  std::vector<VideoAsset> out;
  out.reserve(static_cast<std::size_t>(p.count));
  for (int i = 0; i < p.count; ++i) out.push_back(gen_asset(p, i));
  return out;
}

inline std::vector<VideoAsset> gen_corpus(std::uint64_t seed, int count, double duration_s, int fps,
                                          int sample_rate) {
  CorpusParams p;
  p.seed = seed;
  p.count = count;
  p.duration_s = duration_s;
  p.fps = fps;
  p.sample_rate = sample_rate;
  return gen_corpus(p);
}

// ---------------------------------------------------------------------------
// Perturbations

enum class PerturbationKind {
  noise,
  blur,
  hflip,
  pixelize,
  pad,
  color_jitter,
  rect_overlay,
  audio_noise,
  audio_clip,
  time_stretch,
};

inline constexpr PerturbationKind kVisualKinds[] = {
    PerturbationKind::noise,   PerturbationKind::blur,         PerturbationKind::hflip,
    PerturbationKind::pixelize, PerturbationKind::pad,         PerturbationKind::color_jitter,
    PerturbationKind::rect_overlay};
inline constexpr PerturbationKind kAudioKinds[] = {PerturbationKind::audio_noise, PerturbationKind::audio_clip,
                                                   PerturbationKind::time_stretch};

constexpr bool is_visual(PerturbationKind k) noexcept { return k <= PerturbationKind::rect_overlay; }

constexpr std::string_view to_string(PerturbationKind k) noexcept {
  switch (k) {
    case PerturbationKind::noise: return "noise";
    case PerturbationKind::blur: return "blur";
    case PerturbationKind::hflip: return "hflip";
    case PerturbationKind::pixelize: return "pixelize";
    case PerturbationKind::pad: return "pad";
    case PerturbationKind::color_jitter: return "color_jitter";
    case PerturbationKind::rect_overlay: return "rect_overlay";
    case PerturbationKind::audio_noise: return "audio_noise";
    case PerturbationKind::audio_clip: return "audio_clip";
    case PerturbationKind::time_stretch: return "time_stretch";
  }
  return "?";
}

inline std::optional<PerturbationKind> perturbation_from_string(std::string_view s) {
  for (auto k : kVisualKinds)
    if (to_string(k) == s) return k;
  for (auto k : kAudioKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// One transformation with its parameters. Parameter layout per kind:
///   noise        {variance}
///   blur         {radius_px}
///   hflip        {}
///   pixelize     {ratio}
///   pad          {fraction}            side split and colour drawn from seed
///   color_jitter {brightness, contrast, saturation}
///   rect_overlay {area_fraction}       position, aspect and colour from seed
///   audio_noise  {snr_db}
///   audio_clip   {fraction}            head/tail split drawn from seed
///   time_stretch {ratio}               >1 speeds up
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::noise;
  std::vector<double> params;
  std::uint64_t rng_seed = 0;

  double param(std::size_t i) const {
    require(i < params.size(), ErrorCode::parameter,
            std::string(to_string(kind)) + " is missing parameter " + std::to_string(i));
    return params[i];
  }

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

inline void check(const PerturbationSpec& s) {
  auto in = [&](std::size_t i, double lo, double hi) {
    const double v = s.param(i);
    require(std::isfinite(v) && v >= lo && v <= hi, ErrorCode::parameter,
            std::string(to_string(s.kind)) + " parameter out of range");
  };
  switch (s.kind) {
    case PerturbationKind::noise: in(0, 0.0, 0.05); break;
    case PerturbationKind::blur: in(0, 0.0, 3.0); break;
    case PerturbationKind::hflip: break;
    case PerturbationKind::pixelize: in(0, 0.1, 1.0); break;
    case PerturbationKind::pad: in(0, 0.0, 0.25); break;
    case PerturbationKind::color_jitter:
      for (std::size_t i = 0; i < 3; ++i) in(i, 0.6, 1.4);
      break;
    case PerturbationKind::rect_overlay: in(0, 0.1, 0.3); break;
    case PerturbationKind::audio_noise: in(0, -10.0, 60.0); break;
    case PerturbationKind::audio_clip: in(0, 0.0, 0.2); break;
    case PerturbationKind::time_stretch: in(0, 0.5, 1.5); break;
  }
}

/// Draws parameters for `kind` from the training/query ranges.
inline PerturbationSpec sample_perturbation(PerturbationKind kind, Rng& rng) {
  PerturbationSpec s;
  s.kind = kind;
  switch (kind) {
    case PerturbationKind::noise: s.params = {0.01}; break;
    case PerturbationKind::blur: s.params = {static_cast<double>(uniform_int(rng, 0, 3))}; break;
    case PerturbationKind::hflip: break;
    case PerturbationKind::pixelize: s.params = {uniform(rng, 0.1, 1.0)}; break;
    case PerturbationKind::pad: s.params = {uniform(rng, 0.0, 0.25)}; break;
    case PerturbationKind::color_jitter:
      s.params = {uniform(rng, 0.6, 1.4), uniform(rng, 0.6, 1.4), uniform(rng, 0.6, 1.4)};
      break;
    case PerturbationKind::rect_overlay: s.params = {uniform(rng, 0.1, 0.3)}; break;
    case PerturbationKind::audio_noise: s.params = {5.0}; break;
    case PerturbationKind::audio_clip: s.params = {uniform(rng, 0.0, 0.2)}; break;
    case PerturbationKind::time_stretch: s.params = {uniform(rng, 0.5, 1.5)}; break;
  }
  s.rng_seed = rng();
  return s;
}

namespace detail {

inline Frame hflip(const Frame& f) {
  Frame out(f.height, f.width);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = f.at(y, f.width - 1 - x, c);
  return out;
}

inline Frame box_blur(const Frame& f, int r) {
  if (r <= 0) return f;
  Frame tmp(f.height, f.width), out(f.height, f.width);
  const float norm = 1.0f / static_cast<float>(2 * r + 1);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      for (int c = 0; c < 3; ++c) {
        float s = 0;
        for (int d = -r; d <= r; ++d) s += f.at(y, std::clamp(x + d, 0, f.width - 1), c);
        tmp.at(y, x, c) = s * norm;
      }
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      for (int c = 0; c < 3; ++c) {
        float s = 0;
        for (int d = -r; d <= r; ++d) s += tmp.at(std::clamp(y + d, 0, f.height - 1), x, c);
        out.at(y, x, c) = s * norm;
      }
  return out;
}

inline Frame pixelize(const Frame& f, double ratio) {
  const int sh = std::max(1, static_cast<int>(std::lround(f.height * ratio)));
  const int sw = std::max(1, static_cast<int>(std::lround(f.width * ratio)));
  std::vector<double> acc(static_cast<std::size_t>(sh) * sw * 3, 0.0);
  std::vector<int> cnt(static_cast<std::size_t>(sh) * sw, 0);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const int by = y * sh / f.height, bx = x * sw / f.width;
      const std::size_t b = static_cast<std::size_t>(by) * sw + bx;
      ++cnt[b];
      for (int c = 0; c < 3; ++c) acc[b * 3 + c] += f.at(y, x, c);
    }
  Frame out(f.height, f.width);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const std::size_t b = static_cast<std::size_t>(y * sh / f.height) * sw + x * sw / f.width;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = static_cast<float>(acc[b * 3 + c] / cnt[b]);
    }
  return out;
}

inline void color_jitter(Frame& f, double brightness, double contrast, double saturation) {
  double mean = 0;
  for (float v : f.data) mean += v;
  mean = mean * brightness / static_cast<double>(f.data.size());
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double px[3];
      for (int c = 0; c < 3; ++c) px[c] = f.at(y, x, c) * brightness;
      for (double& v : px) v = (v - mean) * contrast + mean;
      const double gray = (px[0] + px[1] + px[2]) / 3.0;
      for (int c = 0; c < 3; ++c)
        f.at(y, x, c) = static_cast<float>(std::clamp(gray + (px[c] - gray) * saturation, 0.0, 1.0));
    }
}

// Waveform-similarity overlap-add: pitch-preserving stretch to exactly `out_len` samples.
inline std::vector<float> wsola(std::span<const float> in, double ratio, std::size_t out_len) {
  constexpr int kFrame = 512, kHop = kFrame / 2, kTol = 96;
  std::vector<double> window(kFrame);
  for (int i = 0; i < kFrame; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / kFrame);
  std::vector<double> out(out_len + kFrame, 0.0), norm(out_len + kFrame, 0.0);
  const auto n = static_cast<long>(in.size());
  auto sample = [&](long i) -> double { return i >= 0 && i < n ? in[static_cast<std::size_t>(i)] : 0.0; };

  long prev = 0;
  for (std::size_t m = 0; m * kHop < out_len; ++m) {
    const long nominal = static_cast<long>(std::llround(static_cast<double>(m * kHop) * ratio));
    long best = nominal;
    if (m > 0) {
      // Pick the candidate whose start best continues the previously copied frame.
      const long natural = prev + kHop;
      double best_score = -1e300;
      for (long d = -kTol; d <= kTol; d += 2) {
        const long cand = nominal + d;
        if (cand < 0 || cand + kFrame > n) continue;
        double s = 0;
        for (int i = 0; i < kHop; i += 2) s += sample(cand + i) * sample(natural + i);
        if (s > best_score) {
          best_score = s;
          best = cand;
        }
      }
    }
    prev = best;
    const std::size_t o = m * kHop;
    for (int i = 0; i < kFrame; ++i) {
      out[o + i] += window[i] * sample(best + i);
      norm[o + i] += window[i];
    }
  }
  std::vector<float> result(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    result[i] = static_cast<float>(std::clamp(norm[i] > 1e-3 ? out[i] / norm[i] : out[i], -1.0, 1.0));
  return result;
}

}  // namespace detail

/// Applies one visual transformation to every frame with one parameter draw
/// for the whole clip. The waveform is copied untouched.
inline VideoAsset perturb_visual(const VideoAsset& asset, const PerturbationSpec& spec) {
  require(is_visual(spec.kind), ErrorCode::modality,
          std::string(to_string(spec.kind)) + " is not a visual perturbation");
  check(spec);
  require(!asset.frames.empty(), ErrorCode::shape, "asset has no frames");
  Rng rng(mix_seed(spec.rng_seed, 0x5155));
  VideoAsset out = asset;
  const int h = asset.height(), w = asset.width();
  switch (spec.kind) {
    case PerturbationKind::noise: {
      std::normal_distribution<float> gauss(0.0f, static_cast<float>(std::sqrt(spec.param(0))));
      for (auto& f : out.frames)
        for (float& v : f.data) v = std::clamp(v + gauss(rng), 0.0f, 1.0f);
      break;
    }
    case PerturbationKind::blur: {
      const int r = static_cast<int>(std::lround(spec.param(0)));
      for (auto& f : out.frames) f = detail::box_blur(f, r);
      break;
    }
    case PerturbationKind::hflip:
      for (auto& f : out.frames) f = detail::hflip(f);
      break;
    case PerturbationKind::pixelize:
      for (auto& f : out.frames) f = detail::pixelize(f, spec.param(0));
      break;
    case PerturbationKind::pad: {
      const double frac = spec.param(0);
      const int nh = static_cast<int>(std::lround(h * (1.0 + frac)));
      const int nw = static_cast<int>(std::lround(w * (1.0 + frac)));
      const int top = uniform_int(rng, 0, nh - h), left = uniform_int(rng, 0, nw - w);
      float color[3];
      for (float& c : color) c = static_cast<float>(uniform(rng, 0, 1));
      for (auto& f : out.frames) {
        Frame p(nh, nw);
        for (int y = 0; y < nh; ++y)
          for (int x = 0; x < nw; ++x)
            for (int c = 0; c < 3; ++c) p.at(y, x, c) = color[c];
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) p.at(y + top, x + left, c) = f.at(y, x, c);
        f = std::move(p);
      }
      break;
    }
    case PerturbationKind::color_jitter:
      for (auto& f : out.frames) detail::color_jitter(f, spec.param(0), spec.param(1), spec.param(2));
      break;
    case PerturbationKind::rect_overlay: {
      const double area = spec.param(0) * h * w;
      const double aspect = std::exp(uniform(rng, std::log(0.5), std::log(2.0)));
      const int rh = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, h);
      const int rw = std::clamp(static_cast<int>(std::lround(area / rh)), 1, w);
      const int top = uniform_int(rng, 0, h - rh), left = uniform_int(rng, 0, w - rw);
      float color[3];
      for (float& c : color) c = static_cast<float>(uniform(rng, 0, 1));
      for (auto& f : out.frames)
        for (int y = top; y < top + rh; ++y)
          for (int x = left; x < left + rw; ++x)
            for (int c = 0; c < 3; ++c) f.at(y, x, c) = color[c];
      break;
    }
    default: break;
  }
  return out;
}

/// Applies one audio transformation; frames are copied untouched.
inline VideoAsset perturb_audio(const VideoAsset& asset, const PerturbationSpec& spec) {
  require(!is_visual(spec.kind), ErrorCode::modality,
          std::string(to_string(spec.kind)) + " is not an audio perturbation");
  check(spec);
  Rng rng(mix_seed(spec.rng_seed, 0xA0D1));
  VideoAsset out = asset;
  const std::size_t n = asset.waveform.size();
  switch (spec.kind) {
    case PerturbationKind::audio_noise: {
      double power = 0;
      for (float v : asset.waveform) power += static_cast<double>(v) * v;
      power = n ? power / static_cast<double>(n) : 0.0;
      const double sigma = std::sqrt(power / std::pow(10.0, spec.param(0) / 10.0));
      std::normal_distribution<double> gauss(0.0, sigma);
      for (float& v : out.waveform) v = static_cast<float>(std::clamp(v + gauss(rng), -1.0, 1.0));
      break;
    }
    case PerturbationKind::audio_clip: {
      const auto keep = static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - spec.param(0))));
      const std::size_t removed = n - keep;
      const auto head = static_cast<std::size_t>(std::llround(uniform(rng, 0, 1) * static_cast<double>(removed)));
      out.waveform.assign(asset.waveform.begin() + static_cast<std::ptrdiff_t>(head),
                          asset.waveform.begin() + static_cast<std::ptrdiff_t>(head + keep));
      break;
    }
    case PerturbationKind::time_stretch: {
      const double r = spec.param(0);
      if (r == 1.0) break;
      const auto len = static_cast<std::size_t>(std::llround(static_cast<double>(n) / r));
      out.waveform = detail::wsola(asset.waveform, r, len);
      break;
    }
    default: break;
  }
  return out;
}

inline VideoAsset perturb(const VideoAsset& asset, const PerturbationSpec& spec) {
  return is_visual(spec.kind) ? perturb_visual(asset, spec) : perturb_audio(asset, spec);
}

/// Cuts both streams to [start_s, start_s + len_s).
inline VideoAsset truncate(const VideoAsset& asset, double start_s, double len_s) {
  constexpr double kEps = 1e-9;
  require(std::isfinite(start_s) && std::isfinite(len_s), ErrorCode::range, "non-finite window");
  require(start_s >= -kEps && len_s >= 1.0 - kEps && start_s + len_s <= asset.duration_s() + kEps,
          ErrorCode::range, "window outside asset");
  VideoAsset out;
  out.id = asset.id;
  out.fps = asset.fps;
  out.sample_rate = asset.sample_rate;
  const auto f0 = static_cast<std::size_t>(std::llround(start_s * asset.fps));
  const auto nf = static_cast<std::size_t>(std::llround(len_s * asset.fps));
  const std::size_t f1 = std::min(asset.frames.size(), f0 + nf);
  out.frames.assign(asset.frames.begin() + static_cast<std::ptrdiff_t>(f0),
                    asset.frames.begin() + static_cast<std::ptrdiff_t>(f1));
  const std::size_t s0 = std::min(asset.waveform.size(),
                                  static_cast<std::size_t>(std::llround(start_s * asset.sample_rate)));
  const std::size_t s1 = std::min(asset.waveform.size(),
                                  s0 + static_cast<std::size_t>(std::llround(len_s * asset.sample_rate)));
  out.waveform.assign(asset.waveform.begin() + static_cast<std::ptrdiff_t>(s0),
                      asset.waveform.begin() + static_cast<std::ptrdiff_t>(s1));
  return out;
}

}  // namespace vpn
