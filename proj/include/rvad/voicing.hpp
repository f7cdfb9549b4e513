#pragma once

// Per-frame "pitch present" decisions. Two detectors share the FrameMask
// output: a normalized-autocorrelation pitch detector and a spectral-flatness
// threshold detector.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvad/audio_io.hpp"
#include "rvad/common.hpp"
#include "rvad/dsp.hpp"

namespace rvad {

using VoicingMask = FrameMask;

enum class VoicingDetectorKind { AutocorrPitch, SpectralFlatness };

// A frame is voiced iff its spectral flatness is at most theta.
inline VoicingMask detect_sft(std::span<const double> flatness, double theta_sft = 0.5) {
  if (!(theta_sft > 0.0 && theta_sft < 1.0)) throw Error("theta_sft must lie in (0, 1)");
  VoicingMask mask(flatness.size());
  for (std::size_t m = 0; m < flatness.size(); ++m) mask[m] = flatness[m] <= theta_sft;
  return mask;
}

inline VoicingMask detect_sft(const Spectrogram& spec, double theta_sft = 0.5) {
  const std::vector<double> sft = spectral_flatness(spec);
  return detect_sft(std::span<const double>(sft), theta_sft);
}

struct AutocorrParams {
  double f_min_hz = 60.0;
  double f_max_hz = 400.0;
  double rho = 0.6;
  // Frames below this fraction of the loudest frame are never voiced.
  double energy_gate = 1e-6;
};

// Peak normalized autocorrelation of one frame over lags [lag_min, lag_max]:
//   r(t) = sum x(n) x(n+t) / sqrt(sum x(n)^2 * sum x(n+t)^2)
// with sums over the overlapping part of the frame.
inline double peak_autocorrelation(std::span<const double> x, std::size_t lag_min,
                                   std::size_t lag_max) {
  const std::size_t len = x.size();
  if (len < 2) return 0.0;
  lag_max = std::min(lag_max, len - 2);
  std::vector<double> prefix(len + 1, 0.0);
  for (std::size_t n = 0; n < len; ++n) prefix[n + 1] = prefix[n] + x[n] * x[n];

  double best = 0.0;
  for (std::size_t lag = std::max<std::size_t>(lag_min, 1); lag <= lag_max; ++lag) {
    const std::size_t overlap = len - lag;
    double cross = 0.0;
    for (std::size_t n = 0; n < overlap; ++n) cross += x[n] * x[n + lag];
    const double head = prefix[overlap];
    const double tail = prefix[len] - prefix[lag];
    const double denom = std::sqrt(head * tail);
    if (denom > 0.0) best = std::max(best, cross / denom);
  }
  return best;
}

inline VoicingMask detect_pitch_autocorr(const AudioBuffer& audio, const FrameGrid& grid,
                                         const AutocorrParams& p = {}) {
  const double fs = audio.sample_rate_hz;
  if (!(p.f_min_hz > 0.0 && p.f_min_hz < p.f_max_hz && p.f_max_hz < fs / 2.0)) {
    throw Error("pitch range must satisfy 0 < f_min < f_max < fs/2");
  }
  if (!(p.rho > 0.0 && p.rho < 1.0)) throw Error("rho must lie in (0, 1)");

  const auto lag_min = static_cast<std::size_t>(std::lround(fs / p.f_max_hz));
  const auto lag_max = static_cast<std::size_t>(std::lround(fs / p.f_min_hz));
  const std::vector<double> energy = frame_energy(audio, grid);
  const double max_energy =
      energy.empty() ? 0.0 : *std::max_element(energy.begin(), energy.end());

  VoicingMask mask(grid.num_frames, false);
  for (std::size_t m = 0; m < grid.num_frames; ++m) {
    if (energy[m] <= 0.0 || energy[m] < p.energy_gate * max_energy) continue;
    std::span<const double> frame(audio.samples.data() + grid.begin(m), grid.frame_len);
    mask[m] = peak_autocorrelation(frame, lag_min, lag_max) >= p.rho;
  }
  return mask;
}

// Number of voiced frames in the inclusive interval.
inline std::size_t count_voiced_in(const VoicingMask& mask, const Segment& seg) {
  if (seg.start > seg.end || seg.end >= mask.size()) {
    throw Error("interval [" + std::to_string(seg.start) + ", " + std::to_string(seg.end) +
                "] outside mask of " + std::to_string(mask.size()) + " frames");
  }
  std::size_t n = 0;
  for (std::size_t m = seg.start; m <= seg.end; ++m) n += mask[m] ? 1 : 0;
  return n;
}

// Externally computed voicing in the per-frame "0"/"1" format.
inline VoicingMask read_voicing_file(const std::string& path, std::size_t num_frames) {
  FrameLabels labels = read_labels(path);
  if (labels.size() != num_frames) {
    throw Error(path + ": voicing mask has " + std::to_string(labels.size()) +
                " frames, expected " + std::to_string(num_frames));
  }
  return labels.labels;
}

}  // namespace rvad
