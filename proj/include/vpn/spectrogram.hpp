#pragma once

// Log mel-style spectrogram image of a one second audio window: 64
// triangular bands on a log-spaced grid from 20 Hz to Nyquist, 16 time
// slices.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "vpn/error.hpp"

namespace vpn {

inline constexpr int kMelBands = 64;
inline constexpr int kTimeSlices = 16;
inline constexpr double kMelLowHz = 20.0;

namespace detail {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

class MelFrontEnd {
 public:
  explicit MelFrontEnd(int sample_rate) : sample_rate_(sample_rate) {
    slice_len_ = sample_rate / kTimeSlices;
    fft_size_ = 1;
    while (fft_size_ < slice_len_) fft_size_ <<= 1;
    const int bins = fft_size_ / 2 + 1;

    window_.resize(static_cast<std::size_t>(slice_len_));
    for (int i = 0; i < slice_len_; ++i)
      window_[i] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / slice_len_);

    const double nyquist = sample_rate / 2.0;
    std::vector<double> edges(kMelBands + 2);
    for (int i = 0; i < kMelBands + 2; ++i)
      edges[i] = kMelLowHz * std::pow(nyquist / kMelLowHz, static_cast<double>(i) / (kMelBands + 1));
    const double bin_hz = static_cast<double>(sample_rate) / fft_size_;
    filters_.assign(kMelBands, {});
    for (int b = 0; b < kMelBands; ++b) {
      const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
      for (int k = 0; k < bins; ++k) {
        const double f = k * bin_hz;
        double wgt = 0;
        if (f > lo && f <= mid) wgt = (f - lo) / (mid - lo);
        else if (f > mid && f < hi) wgt = (hi - f) / (hi - mid);
        if (wgt > 0) filters_[b].push_back({k, wgt});
      }
      // Bands narrower than one FFT bin take the bin nearest their centre.
      if (filters_[b].empty())
        filters_[b].push_back({std::min(bins - 1, static_cast<int>(std::lround(mid / bin_hz))), 1.0});
    }

    in_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * fft_size_)));
    out_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(fft_size_, in_.get(), out_.get(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  MelFrontEnd(const MelFrontEnd&) = delete;
  MelFrontEnd& operator=(const MelFrontEnd&) = delete;

  ~MelFrontEnd() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }

  /// Band energies, band-major: out[b * kTimeSlices + t].
  std::vector<double> band_energies(std::span<const float> window) const {
    require(static_cast<int>(window.size()) == sample_rate_, ErrorCode::shape,
            "audio window must hold exactly one second of samples");
    const int bins = fft_size_ / 2 + 1;
    std::vector<double> in(static_cast<std::size_t>(fft_size_));
    std::vector<fftw_complex> spec(static_cast<std::size_t>(bins));
    std::vector<double> power(static_cast<std::size_t>(bins));
    std::vector<double> energies(kMelBands * kTimeSlices, 0.0);
    for (int t = 0; t < kTimeSlices; ++t) {
      std::fill(in.begin(), in.end(), 0.0);
      const auto* src = window.data() + static_cast<std::size_t>(t) * slice_len_;
      for (int i = 0; i < slice_len_; ++i) in[i] = src[i] * window_[i];
      fftw_execute_dft_r2c(plan_, in.data(), spec.data());
      for (int k = 0; k < bins; ++k) power[k] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
      for (int b = 0; b < kMelBands; ++b) {
        double e = 0;
        for (const auto& [k, wgt] : filters_[b]) e += wgt * power[k];
        energies[static_cast<std::size_t>(b) * kTimeSlices + t] = e;
      }
    }
    return energies;
  }

  int sample_rate() const noexcept { return sample_rate_; }

  static std::shared_ptr<const MelFrontEnd> for_rate(int sample_rate) {
    static std::mutex mu;
    static std::map<int, std::shared_ptr<const MelFrontEnd>> cache;
    require(sample_rate >= 8000, ErrorCode::parameter, "sample rate must be >= 8000");
    std::lock_guard lock(mu);
    auto& slot = cache[sample_rate];
    if (!slot) slot = std::make_shared<const MelFrontEnd>(sample_rate);
    return slot;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
  }

  struct Tap {
    int bin;
    double weight;
  };

  int sample_rate_;
  int slice_len_;
  int fft_size_;
  std::vector<double> window_;
  std::vector<std::vector<Tap>> filters_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

/// Log-compressed band energies with a floor relative to the loudest cell,
/// mean-removed so overall gain cancels. Silence maps to all zeros.
inline std::vector<float> log_mel_image(std::span<const float> window, int sample_rate) {
  const auto energies = detail::MelFrontEnd::for_rate(sample_rate)->band_energies(window);
  const double peak = *std::max_element(energies.begin(), energies.end());
  const double floor = 0.1 * peak + 1e-12;
  std::vector<double> logs(energies.size());
  double mean = 0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    logs[i] = std::log(energies[i] + floor);
    mean += logs[i];
  }
  mean /= static_cast<double>(logs.size());
  std::vector<float> out(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) out[i] = static_cast<float>(logs[i] - mean);
  return out;
}

}  // namespace vpn
