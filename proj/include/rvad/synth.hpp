#pragma once

// Synthetic test material: harmonic "voiced" bursts in silence, white noise,
// and reference frame labels for them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "rvad/audio_io.hpp"
#include "rvad/common.hpp"
#include "rvad/dsp.hpp"

namespace rvad::synth {

// Band-limited pulse train: harmonics of f0 up to max_hz with 1/k amplitudes,
// raised-cosine ramps of ramp_sec at both ends, scaled to the given peak.
inline std::vector<double> harmonic_tone(int fs, double f0, std::size_t num_samples,
                                         double peak = 0.5, double max_hz = 3600.0,
                                         double ramp_sec = 0.01) {
  std::vector<double> out(num_samples, 0.0);
  const std::size_t harmonics =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::min(max_hz, 0.45 * fs) / f0));
  for (std::size_t n = 0; n < num_samples; ++n) {
    const double t = static_cast<double>(n) / fs;
    double v = 0.0;
    for (std::size_t k = 1; k <= harmonics; ++k) {
      v += std::cos(2.0 * std::numbers::pi * f0 * static_cast<double>(k) * t) / static_cast<double>(k);
    }
    out[n] = v;
  }
  double max_abs = 0.0;
  for (double v : out) max_abs = std::max(max_abs, std::abs(v));
  const auto ramp = static_cast<std::size_t>(ramp_sec * fs);
  for (std::size_t n = 0; n < num_samples; ++n) {
    double g = peak / (max_abs > 0 ? max_abs : 1.0);
    if (ramp > 0 && n < ramp) {
      g *= 0.5 - 0.5 * std::cos(std::numbers::pi * n / ramp);
    } else if (ramp > 0 && num_samples - 1 - n < ramp) {
      g *= 0.5 - 0.5 * std::cos(std::numbers::pi * (num_samples - 1 - n) / ramp);
    }
    out[n] *= g;
  }
  return out;
}

inline std::vector<double> sine(int fs, double freq, std::size_t num_samples, double amp = 0.5,
                                double phase = 0.0) {
  std::vector<double> out(num_samples);
  for (std::size_t n = 0; n < num_samples; ++n) {
    out[n] = amp * std::sin(2.0 * std::numbers::pi * freq * n / fs + phase);
  }
  return out;
}

template <typename Rng>
std::vector<double> white_noise(Rng& rng, std::size_t num_samples, double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> out(num_samples);
  for (auto& v : out) v = dist(rng);
  return out;
}

struct Utterance {
  AudioBuffer audio;
  // Sample ranges [first, second) of the voiced bursts.
  std::vector<std::pair<std::size_t, std::size_t>> bursts;
};

struct UtteranceParams {
  int sample_rate_hz = 8000;
  double lead_min_sec = 0.5, lead_max_sec = 1.0;
  double burst_min_sec = 0.4, burst_max_sec = 1.0;
  double gap_min_sec = 0.6, gap_max_sec = 1.2;
  std::size_t min_bursts = 1, max_bursts = 3;
  double f0_min = 120.0, f0_max = 250.0;
  double peak_min = 0.2, peak_max = 0.6;
};

// Silence, then bursts separated by silence, then silence.
template <typename Rng>
Utterance make_utterance(Rng& rng, const UtteranceParams& p = {}) {
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto secs = [&p](double s) { return static_cast<std::size_t>(std::lround(s * p.sample_rate_hz)); };

  Utterance u;
  u.audio.sample_rate_hz = p.sample_rate_hz;
  auto& x = u.audio.samples;
  x.assign(secs(uniform(p.lead_min_sec, p.lead_max_sec)), 0.0);
  const auto bursts = std::uniform_int_distribution<std::size_t>(p.min_bursts, p.max_bursts)(rng);
  for (std::size_t b = 0; b < bursts; ++b) {
    if (b > 0) x.resize(x.size() + secs(uniform(p.gap_min_sec, p.gap_max_sec)), 0.0);
    const std::size_t len = secs(uniform(p.burst_min_sec, p.burst_max_sec));
    const std::vector<double> tone = harmonic_tone(p.sample_rate_hz, uniform(p.f0_min, p.f0_max),
                                                   len, uniform(p.peak_min, p.peak_max));
    u.bursts.emplace_back(x.size(), x.size() + len);
    x.insert(x.end(), tone.begin(), tone.end());
  }
  x.resize(x.size() + secs(uniform(p.lead_min_sec, p.lead_max_sec)), 0.0);
  return u;
}

// Frame m is speech iff its centre sample lies inside a burst.
inline FrameMask reference_labels(const Utterance& u, const FrameGrid& grid) {
  FrameMask ref(grid.num_frames, false);
  for (std::size_t m = 0; m < grid.num_frames; ++m) {
    const std::size_t centre = grid.begin(m) + grid.frame_len / 2;
    for (const auto& [b, e] : u.bursts) {
      if (centre >= b && centre < e) ref[m] = true;
    }
  }
  return ref;
}

}  // namespace rvad::synth
