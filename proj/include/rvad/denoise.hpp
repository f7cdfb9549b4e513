#pragma once

// Two-pass denoising.
//
// Pass one finds high-energy segments from the smoothed SNR-weighted energy
// difference and zeroes those that carry (almost) no pitch. Pass two is
// spectral subtraction with a minimum-statistics noise estimate; the "mod"
// variant freezes the estimator over zeroed frames and removes dominant
// low-frequency energy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rvad/audio_io.hpp"
#include "rvad/common.hpp"
#include "rvad/dsp.hpp"
#include "rvad/snr_feature.hpp"
#include "rvad/voicing.hpp"

namespace rvad {

// What the high-energy threshold is a fraction of: the per-super-segment
// maximum of the smoothed distance, or of the raw frame energy.
enum class HeThresholdBasis { Distance, Energy };

inline std::optional<HeThresholdBasis> parse_he_basis(std::string_view s) {
  if (s == "distance") return HeThresholdBasis::Distance;
  if (s == "energy") return HeThresholdBasis::Energy;
  return std::nullopt;
}

inline std::vector<double> high_energy_thresholds(const FrameFeatures& f, std::size_t super_len,
                                                  double alpha, HeThresholdBasis basis) {
  const std::vector<double>& ref = basis == HeThresholdBasis::Distance ? f.diff_smooth : f.energy;
  std::vector<double> theta(f.size(), 0.0);
  for (std::size_t begin = 0; begin < f.size(); begin += super_len) {
    const std::size_t end = std::min(f.size(), begin + super_len);
    const double peak = *std::max_element(ref.begin() + static_cast<std::ptrdiff_t>(begin),
                                          ref.begin() + static_cast<std::ptrdiff_t>(end));
    std::fill(theta.begin() + static_cast<std::ptrdiff_t>(begin),
              theta.begin() + static_cast<std::ptrdiff_t>(end), alpha * peak);
  }
  return theta;
}

// Frames whose smoothed distance exceeds the super-segment threshold, grouped
// into maximal runs.
inline SegmentList detect_high_energy(const FrameFeatures& f, std::size_t super_len = 200,
                                      double alpha = 0.25,
                                      HeThresholdBasis basis = HeThresholdBasis::Distance) {
  if (super_len == 0) throw Error("super-segment length must be positive");
  const std::vector<double> theta = high_energy_thresholds(f, super_len, alpha, basis);
  FrameMask high(f.size());
  for (std::size_t m = 0; m < f.size(); ++m) high[m] = f.diff_smooth[m] > theta[m];
  return mask_to_segments(high);
}

struct FirstPassResult {
  AudioBuffer audio;
  SegmentList zeroed;
};

// Zeroes every sample covered by a high-energy segment holding at most
// min_pitch_frames voiced frames.
inline FirstPassResult first_pass_denoise(const AudioBuffer& audio, const FrameGrid& grid,
                                          const SegmentList& segments, const VoicingMask& mask,
                                          std::size_t min_pitch_frames = 2) {
  FirstPassResult out{audio, {}};
  for (const auto& seg : segments) {
    if (seg.end >= grid.num_frames) throw Error("high-energy segment outside frame grid");
    if (count_voiced_in(mask, seg) > min_pitch_frames) continue;
    const std::size_t begin = grid.begin(seg.start);
    const std::size_t end = std::min(grid.end(seg.end), out.audio.size());
    std::fill(out.audio.samples.begin() + static_cast<std::ptrdiff_t>(begin),
              out.audio.samples.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
    out.zeroed.push_back(seg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Minimum-statistics noise estimation

// Exact minimum of the last `window` pushed values.
class SlidingMin {
 public:
  explicit SlidingMin(std::size_t window = 1) : window_(std::max<std::size_t>(window, 1)) {}

  void push(double v) {
    while (!queue_.empty() && queue_.back().second >= v) queue_.pop_back();
    queue_.emplace_back(count_, v);
    ++count_;
    while (queue_.front().first + window_ <= count_ - 1) queue_.pop_front();
  }

  double min() const { return queue_.empty() ? 0.0 : queue_.front().second; }
  std::size_t window() const { return window_; }

  friend bool operator==(const SlidingMin&, const SlidingMin&) = default;

 private:
  std::size_t window_;
  std::size_t count_ = 0;
  std::deque<std::pair<std::size_t, double>> queue_;
};

struct MsneParams {
  double smoothing = 0.85;    // periodogram smoothing factor
  double bias = 1.5;          // fixed bias compensation
  std::size_t window = 150;   // minimum search length in frames

  friend bool operator==(const MsneParams&, const MsneParams&) = default;
};

struct MsneState {
  MsneParams params;
  std::vector<double> p_smooth;
  std::vector<SlidingMin> minima;
  std::vector<double> noise_power;  // current estimate per bin
  std::size_t frames_seen = 0;

  MsneState() = default;
  MsneState(std::size_t num_bins, MsneParams p)
      : params(p),
        p_smooth(num_bins, 0.0),
        minima(num_bins, SlidingMin(p.window)),
        noise_power(num_bins, 0.0) {}

  std::size_t num_bins() const { return p_smooth.size(); }

  // The first frame seeds the smoothed periodogram directly.
  void update(std::span<const double> power) {
    if (power.size() != num_bins()) throw Error("periodogram size mismatch");
    const double eta = params.smoothing;
    for (std::size_t k = 0; k < num_bins(); ++k) {
      p_smooth[k] = frames_seen == 0 ? power[k] : eta * p_smooth[k] + (1.0 - eta) * power[k];
      minima[k].push(p_smooth[k]);
      noise_power[k] = params.bias * minima[k].min();
    }
    ++frames_seen;
  }

  friend bool operator==(const MsneState&, const MsneState&) = default;
};

inline MsneState msne_update(MsneState state, std::span<const double> power) {
  state.update(power);
  return state;
}

// Frames inside zeroed noise segments leave the estimator untouched.
inline MsneState msne_mod_update(MsneState state, std::span<const double> power,
                                 bool frame_is_zeroed) {
  if (!frame_is_zeroed) state.update(power);
  return state;
}

inline constexpr double kLowBandHz = 217.0;

// Zeroes the bins below cutoff_hz when they hold more than half of the frame
// energy. Returns whether the bins were zeroed.
inline bool suppress_low_band(std::span<cplx> frame, double bin_hz, double cutoff_hz = kLowBandHz) {
  double low = 0.0;
  double total = 0.0;
  std::size_t low_bins = 0;
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const double p = std::norm(frame[k]);
    total += p;
    if (k * bin_hz < cutoff_hz) {
      low += p;
      low_bins = k + 1;
    }
  }
  if (total <= 0.0 || low <= 0.5 * total) return false;
  std::fill(frame.begin(), frame.begin() + static_cast<std::ptrdiff_t>(low_bins), cplx{});
  return true;
}

inline constexpr double kSubtractionFloor = 0.002;

// |S|^2 = max(|X|^2 - noise, floor * noise), keeping the phase of X. Bins with
// |X| = 0 carry no phase and stay zero.
inline void spectral_subtract_frame(std::span<cplx> frame, std::span<const double> noise_power,
                                    double floor = kSubtractionFloor) {
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const double p = std::norm(frame[k]);
    if (p == 0.0) continue;
    const double target = std::max(p - noise_power[k], floor * noise_power[k]);
    frame[k] *= std::sqrt(target / p);
  }
}

// noise_power is row-major, one row of num_bins per frame.
inline Spectrogram spectral_subtract(const Spectrogram& spec, std::span<const double> noise_power,
                                     double floor = kSubtractionFloor) {
  if (noise_power.size() != spec.bins.size()) throw Error("noise power shape mismatch");
  Spectrogram out = spec;
  for (std::size_t m = 0; m < out.num_frames; ++m) {
    spectral_subtract_frame(out.frame(m), noise_power.subspan(m * out.num_bins, out.num_bins),
                            floor);
  }
  return out;
}

// Weighted overlap-add with the analysis window, normalized by the summed
// squared-window envelope.
inline AudioBuffer reconstruct(const Spectrogram& spec, const FrameGrid& grid) {
  AudioBuffer out;
  out.sample_rate_hz = static_cast<int>(std::lround(spec.bin_hz * static_cast<double>(spec.nfft)));
  out.samples.assign(grid.total_samples, 0.0);
  if (spec.num_frames == 0) return out;
  if (spec.num_frames != grid.num_frames) throw Error("spectrogram does not match frame grid");

  const std::vector<double> window = hamming(grid.frame_len);
  std::vector<double> envelope(grid.total_samples, 0.0);
  std::vector<double> buf(spec.nfft);
  RealFft fft(spec.nfft);
  for (std::size_t m = 0; m < spec.num_frames; ++m) {
    fft.inverse(spec.frame(m), buf);
    const std::size_t base = grid.begin(m);
    for (std::size_t n = 0; n < grid.frame_len; ++n) {
      out.samples[base + n] += window[n] * buf[n];
      envelope[base + n] += window[n] * window[n];
    }
  }
  for (std::size_t n = 0; n < out.size(); ++n) out.samples[n] /= std::max(envelope[n], 1e-8);
  return out;
}

enum class EnhanceMethod { None, Msne, MsneMod };

inline std::optional<EnhanceMethod> parse_enhance(std::string_view s) {
  if (s == "none") return EnhanceMethod::None;
  if (s == "msne") return EnhanceMethod::Msne;
  if (s == "msne-mod") return EnhanceMethod::MsneMod;
  return std::nullopt;
}

inline const char* to_string(EnhanceMethod m) {
  switch (m) {
    case EnhanceMethod::None: return "none";
    case EnhanceMethod::Msne: return "msne";
    case EnhanceMethod::MsneMod: return "msne-mod";
  }
  return "?";
}

struct SecondPassOptions {
  EnhanceMethod method = EnhanceMethod::Msne;
  MsneParams msne;
  double subtraction_floor = kSubtractionFloor;
  double low_band_hz = kLowBandHz;
};

// Spectral subtraction over the whole utterance. `zeroed` lists the frames
// cleared by the first pass. When noise_floor is non-null it receives the
// per-frame, per-bin noise estimate (row-major).
inline AudioBuffer second_pass_denoise(const AudioBuffer& audio, const FrameGrid& grid,
                                       const SegmentList& zeroed, const SecondPassOptions& opt,
                                       std::vector<double>* noise_floor = nullptr) {
  if (opt.method == EnhanceMethod::None || grid.num_frames == 0) {
    if (noise_floor) noise_floor->clear();
    return audio;
  }
  Spectrogram spec = stft(audio, grid);
  const FrameMask frozen = segments_to_mask(zeroed, grid.num_frames);
  const bool mod = opt.method == EnhanceMethod::MsneMod;

  MsneState state(spec.num_bins, opt.msne);
  std::vector<double> power(spec.num_bins);
  if (noise_floor) noise_floor->assign(spec.bins.size(), 0.0);
  for (std::size_t m = 0; m < spec.num_frames; ++m) {
    std::span<cplx> frame = spec.frame(m);
    for (std::size_t k = 0; k < spec.num_bins; ++k) power[k] = std::norm(frame[k]);
    if (!(mod && frozen[m])) state.update(power);
    if (noise_floor) {
      std::copy(state.noise_power.begin(), state.noise_power.end(),
                noise_floor->begin() + static_cast<std::ptrdiff_t>(m * spec.num_bins));
    }
    spectral_subtract_frame(frame, state.noise_power, opt.subtraction_floor);
    if (mod) suppress_low_band(frame, spec.bin_hz, opt.low_band_hz);
  }
  AudioBuffer out = reconstruct(spec, grid);
  out.sample_rate_hz = audio.sample_rate_hz;
  return out;
}

}  // namespace rvad
