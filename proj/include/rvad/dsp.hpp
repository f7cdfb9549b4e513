#pragma once

// Frame-level primitives: high-pass preprocessing, framing geometry, frame
// energy, a radix-2 real FFT, the STFT and spectral flatness.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rvad/audio_io.hpp"
#include "rvad/common.hpp"

namespace rvad {

using cplx = std::complex<double>;

// First-order RC high-pass: y(n) = a * (y(n-1) + x(n) - x(n-1)),
// a = 1 / (1 + 2*pi*fc/fs), with zero initial state.
inline AudioBuffer highpass(const AudioBuffer& audio, double cutoff_hz = 60.0) {
  if (audio.sample_rate_hz <= 2.0 * cutoff_hz) {
    throw Error("high-pass requires sample rate above " + std::to_string(2.0 * cutoff_hz) +
                " Hz");
  }
  const double a = 1.0 / (1.0 + 2.0 * std::numbers::pi * cutoff_hz / audio.sample_rate_hz);
  AudioBuffer out;
  out.sample_rate_hz = audio.sample_rate_hz;
  out.samples.resize(audio.size());
  double y_prev = 0.0;
  double x_prev = 0.0;
  for (std::size_t n = 0; n < audio.size(); ++n) {
    const double x = audio.samples[n];
    const double y = a * (y_prev + x - x_prev);
    out.samples[n] = y;
    y_prev = y;
    x_prev = x;
  }
  return out;
}

// Frame m covers samples [m*shift, m*shift + len).
struct FrameGrid {
  std::size_t frame_len = 0;
  std::size_t frame_shift = 0;
  std::size_t num_frames = 0;
  std::size_t total_samples = 0;

  std::size_t begin(std::size_t m) const { return m * frame_shift; }
  std::size_t end(std::size_t m) const { return m * frame_shift + frame_len; }
  friend bool operator==(const FrameGrid&, const FrameGrid&) = default;
};

inline FrameGrid make_grid(std::size_t total_samples, int sample_rate_hz, double frame_len_ms,
                           double frame_shift_ms) {
  if (!(frame_shift_ms > 0.0) || frame_len_ms < frame_shift_ms) {
    throw Error("frame geometry requires frame_len_ms >= frame_shift_ms > 0");
  }
  FrameGrid g;
  g.frame_len = static_cast<std::size_t>(std::lround(frame_len_ms * sample_rate_hz / 1000.0));
  g.frame_shift = static_cast<std::size_t>(std::lround(frame_shift_ms * sample_rate_hz / 1000.0));
  if (g.frame_shift == 0) throw Error("frame shift rounds to zero samples");
  g.total_samples = total_samples;
  g.num_frames = total_samples < g.frame_len
                     ? 0
                     : (total_samples - g.frame_len) / g.frame_shift + 1;
  return g;
}

inline FrameGrid make_grid(const AudioBuffer& audio, double frame_len_ms = 25.0,
                           double frame_shift_ms = 10.0) {
  return make_grid(audio.size(), audio.sample_rate_hz, frame_len_ms, frame_shift_ms);
}

// Sum of squares per frame; no window, no pre-emphasis.
inline std::vector<double> frame_energy(std::span<const double> samples, const FrameGrid& grid) {
  std::vector<double> e(grid.num_frames, 0.0);
  for (std::size_t m = 0; m < grid.num_frames; ++m) {
    double acc = 0.0;
    for (std::size_t n = grid.begin(m); n < grid.end(m); ++n) acc += samples[n] * samples[n];
    e[m] = acc;
  }
  return e;
}

inline std::vector<double> frame_energy(const AudioBuffer& audio, const FrameGrid& grid) {
  return frame_energy(std::span<const double>(audio.samples), grid);
}

// Symmetric Hamming window.
inline std::vector<double> hamming(std::size_t len) {
  std::vector<double> w(len, 1.0);
  if (len < 2) return w;
  for (std::size_t n = 0; n < len; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / static_cast<double>(len - 1));
  }
  return w;
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Radix-2 FFT for real signals of power-of-two length n, computed through a
// complex transform of length n/2.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n), half_(n / 2) {
    if (n < 2 || (n & (n - 1)) != 0) throw Error("FFT length must be a power of two >= 2");
    rev_.resize(half_);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < half_) ++bits;
    for (std::size_t i = 0; i < half_; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1) << (bits - 1 - b);
      rev_[i] = r;
    }
    twiddle_.resize(half_ / 2 + 1);
    for (std::size_t k = 0; k < twiddle_.size(); ++k) {
      twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / static_cast<double>(half_));
    }
    post_.resize(half_ + 1);
    for (std::size_t k = 0; k <= half_; ++k) {
      post_[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / static_cast<double>(n_));
    }
    work_.resize(half_);
  }

  std::size_t size() const { return n_; }
  std::size_t num_bins() const { return half_ + 1; }

  // in: n real samples. out: n/2 + 1 bins.
  void forward(std::span<const double> in, std::span<cplx> out) {
    for (std::size_t j = 0; j < half_; ++j) work_[j] = cplx(in[2 * j], in[2 * j + 1]);
    transform(work_, false);
    for (std::size_t k = 0; k <= half_; ++k) {
      const cplx zk = work_[k % half_];
      const cplx zc = std::conj(work_[(half_ - k) % half_]);
      const cplx even = 0.5 * (zk + zc);
      const cplx odd = cplx(0.0, -0.5) * (zk - zc);
      out[k] = even + post_[k] * odd;
    }
  }

  // in: n/2 + 1 bins of a real signal. out: n real samples (1/n normalized).
  void inverse(std::span<const cplx> in, std::span<double> out) {
    for (std::size_t k = 0; k < half_; ++k) {
      const cplx xk = in[k];
      const cplx xc = std::conj(in[half_ - k]);
      const cplx even = 0.5 * (xk + xc);
      const cplx odd = 0.5 * (xk - xc) * std::conj(post_[k]);
      work_[k] = even + cplx(0.0, 1.0) * odd;
    }
    transform(work_, true);
    const double scale = 1.0 / static_cast<double>(half_);
    for (std::size_t j = 0; j < half_; ++j) {
      out[2 * j] = work_[j].real() * scale;
      out[2 * j + 1] = work_[j].imag() * scale;
    }
  }

 private:
  void transform(std::vector<cplx>& a, bool inverse) const {
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t step = n / len;
      for (std::size_t i = 0; i < n; i += len) {
        for (std::size_t j = 0; j < len / 2; ++j) {
          const cplx w = twiddle_lookup(j * step);
          const double wr = w.real();
          const double wi = inverse ? -w.imag() : w.imag();
          const cplx u = a[i + j];
          const cplx b = a[i + j + len / 2];
          // Plain real arithmetic; operator* on std::complex adds NaN recovery.
          const cplx v(b.real() * wr - b.imag() * wi, b.real() * wi + b.imag() * wr);
          a[i + j] = u + v;
          a[i + j + len / 2] = u - v;
        }
      }
    }
  }

  // exp(-2*pi*i*k/half) for k < half, from the stored first half-period.
  cplx twiddle_lookup(std::size_t k) const {
    if (k < twiddle_.size()) return twiddle_[k];
    return -twiddle_[k - half_ / 2];
  }

  std::size_t n_;
  std::size_t half_;
  std::vector<std::size_t> rev_;
  std::vector<cplx> twiddle_;
  std::vector<cplx> post_;
  std::vector<cplx> work_;
};

// One-sided STFT, row-major: bins of frame m are at [m*num_bins, (m+1)*num_bins).
struct Spectrogram {
  std::vector<cplx> bins;
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
  std::size_t nfft = 0;
  double bin_hz = 0.0;

  std::span<cplx> frame(std::size_t m) { return {bins.data() + m * num_bins, num_bins}; }
  std::span<const cplx> frame(std::size_t m) const {
    return {bins.data() + m * num_bins, num_bins};
  }
  cplx& at(std::size_t m, std::size_t k) { return bins[m * num_bins + k]; }
  const cplx& at(std::size_t m, std::size_t k) const { return bins[m * num_bins + k]; }
};

inline Spectrogram empty_spectrogram(const FrameGrid& grid, int sample_rate_hz) {
  Spectrogram spec;
  spec.nfft = std::max<std::size_t>(2, next_pow2(grid.frame_len));
  spec.num_bins = spec.nfft / 2 + 1;
  spec.num_frames = grid.num_frames;
  spec.bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(spec.nfft);
  spec.bins.assign(spec.num_frames * spec.num_bins, cplx{});
  return spec;
}

// Hamming-windowed frames zero-padded to the next power of two.
inline Spectrogram stft(const AudioBuffer& audio, const FrameGrid& grid) {
  Spectrogram spec = empty_spectrogram(grid, audio.sample_rate_hz);
  if (grid.num_frames == 0) return spec;
  const std::vector<double> window = hamming(grid.frame_len);
  RealFft fft(spec.nfft);
  std::vector<double> buf(spec.nfft, 0.0);
  for (std::size_t m = 0; m < grid.num_frames; ++m) {
    const double* x = audio.samples.data() + grid.begin(m);
    for (std::size_t n = 0; n < grid.frame_len; ++n) buf[n] = x[n] * window[n];
    fft.forward(buf, spec.frame(m));
  }
  return spec;
}

inline constexpr double kMagnitudeFloor = 1e-10;

// Ratio of geometric to arithmetic mean of the floored magnitude spectrum,
// over all one-sided bins.
inline double spectral_flatness(std::span<const cplx> frame) {
  double log_sum = 0.0;
  double lin_sum = 0.0;
  for (const cplx& c : frame) {
    const double mag = std::max(std::sqrt(std::norm(c)), kMagnitudeFloor);
    log_sum += std::log(mag);
    lin_sum += mag;
  }
  const double k = static_cast<double>(frame.size());
  return std::min(1.0, std::exp(log_sum / k) / (lin_sum / k));
}

inline std::vector<double> spectral_flatness(const Spectrogram& spec) {
  std::vector<double> out(spec.num_frames);
  for (std::size_t m = 0; m < spec.num_frames; ++m) out[m] = spectral_flatness(spec.frame(m));
  return out;
}

}  // namespace rvad
