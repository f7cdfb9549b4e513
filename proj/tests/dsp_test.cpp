#include "rvad/dsp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rvad/synth.hpp"

namespace rvad {
namespace {

std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n, double sigma = 0.3) {
  return synth::white_noise(rng, n, sigma);
}

TEST(Highpass, ConstantInputDecays) {
  AudioBuffer x{std::vector<double>(400, 0.7), 8000};
  AudioBuffer y = highpass(x);
  for (std::size_t n = 1; n < y.size(); ++n) {
    EXPECT_LT(std::abs(y.samples[n]), std::abs(y.samples[n - 1]));
  }
  EXPECT_LT(std::abs(y.samples.back()), 1e-6);
}

TEST(Highpass, ZeroInZeroOut) {
  AudioBuffer y = highpass(AudioBuffer{std::vector<double>(100, 0.0), 16000});
  for (double v : y.samples) EXPECT_EQ(v, 0.0);
}

TEST(Highpass, PassbandMatchesAnalyticResponse) {
  const int fs = 8000;
  const double f = 1000.0;
  AudioBuffer x{synth::sine(fs, f, 8000), fs};
  AudioBuffer y = highpass(x);
  // Steady state only.
  std::vector<double> xs(x.samples.begin() + 2000, x.samples.end());
  std::vector<double> ys(y.samples.begin() + 2000, y.samples.end());
  const double a = 1.0 / (1.0 + 2.0 * std::numbers::pi * 60.0 / fs);
  const double w = 2.0 * std::numbers::pi * f / fs;
  const double h2 = a * a * (2.0 - 2.0 * std::cos(w)) / (1.0 - 2.0 * a * std::cos(w) + a * a);
  const double ratio = power(ys) / power(xs);
  EXPECT_NEAR(ratio, h2, 0.01 * h2);
  EXPECT_LT(std::abs(10.0 * std::log10(ratio)), 1.0);
}

TEST(Highpass, LinearProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    AudioBuffer x{random_signal(rng, 1000), 8000};
    AudioBuffer z{random_signal(rng, 1000), 8000};
    const double a = 0.3 + trial, b = -2.0 + 0.5 * trial;
    AudioBuffer mix{std::vector<double>(1000), 8000};
    for (std::size_t i = 0; i < 1000; ++i) mix.samples[i] = a * x.samples[i] + b * z.samples[i];
    AudioBuffer hx = highpass(x), hz = highpass(z), hm = highpass(mix);
    for (std::size_t i = 0; i < 1000; ++i) {
      const double expect = a * hx.samples[i] + b * hz.samples[i];
      EXPECT_NEAR(hm.samples[i], expect, 1e-9 * (std::abs(expect) + 1e-3));
    }
  }
}

TEST(Highpass, RejectsLowSampleRate) {
  EXPECT_THROW(highpass(AudioBuffer{{0.0}, 100}), Error);
}

TEST(Grid, Geometry) {
  FrameGrid g = make_grid(800, 8000, 25, 10);
  EXPECT_EQ(g.frame_len, 200u);
  EXPECT_EQ(g.frame_shift, 80u);
  EXPECT_EQ(g.num_frames, 8u);
  EXPECT_EQ(make_grid(199, 8000, 25, 10).num_frames, 0u);
  EXPECT_EQ(make_grid(200, 8000, 25, 10).num_frames, 1u);
  FrameGrid g16 = make_grid(16000, 16000, 25, 10);
  EXPECT_EQ(g16.frame_len, 400u);
  EXPECT_EQ(g16.frame_shift, 160u);
}

TEST(Grid, NeverIndexesPastEndProperty) {
  for (std::size_t n = 0; n < 3000; n += 37) {
    for (int fs : {8000, 11025, 16000}) {
      FrameGrid g = make_grid(n, fs, 25, 10);
      if (g.num_frames > 0) {
        EXPECT_LE(g.end(g.num_frames - 1), n);
        EXPECT_GT(g.end(g.num_frames), n);
      }
    }
  }
}

TEST(Grid, RejectsBadGeometry) {
  EXPECT_THROW(make_grid(100, 8000, 10, 25), Error);
  EXPECT_THROW(make_grid(100, 8000, 25, 0), Error);
}

TEST(FrameEnergy, KnownValues) {
  AudioBuffer x{std::vector<double>(400, 0.0), 8000};
  std::fill(x.samples.begin() + 200, x.samples.end(), 0.5);
  FrameGrid g = make_grid(x);
  auto e = frame_energy(x, g);
  EXPECT_EQ(e[0], 0.0);
  // last frame starts at 160: 160 samples of 0.5
  EXPECT_DOUBLE_EQ(e.back(), 40.0);
}

TEST(FrameEnergy, MatchesBruteForce) {
  std::mt19937_64 rng(9);
  AudioBuffer x{random_signal(rng, 4321), 8000};
  FrameGrid g = make_grid(x);
  auto e = frame_energy(x, g);
  auto ref = oracle::frame_energy(x.samples, 200, 80);
  ASSERT_EQ(e.size(), ref.size());
  for (std::size_t m = 0; m < e.size(); ++m) EXPECT_NEAR(e[m], ref[m], 1e-12 * ref[m]);
}

TEST(FrameEnergy, AdditiveOverDisjointSamples) {
  std::mt19937_64 rng(10);
  std::vector<double> x = random_signal(rng, 1000);
  std::vector<double> lo = x, hi = x;
  for (std::size_t i = 0; i < x.size(); ++i) (i % 2 ? lo : hi)[i] = 0.0;
  FrameGrid g = make_grid(1000, 8000, 25, 10);
  auto e = frame_energy(x, g), el = frame_energy(lo, g), eh = frame_energy(hi, g);
  for (std::size_t m = 0; m < e.size(); ++m) {
    EXPECT_GE(el[m], 0.0);
    EXPECT_NEAR(e[m], el[m] + eh[m], 1e-12 * e[m]);
  }
}

TEST(RealFft, MatchesDirectDft) {
  std::mt19937_64 rng(12);
  for (std::size_t n : {2u, 4u, 8u, 64u, 256u, 512u}) {
    std::vector<double> x = random_signal(rng, n);
    RealFft fft(n);
    std::vector<cplx> out(fft.num_bins());
    fft.forward(x, out);
    for (std::size_t k = 0; k <= n / 2; ++k) {
      cplx ref{};
      for (std::size_t t = 0; t < n; ++t) {
        ref += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / n);
      }
      EXPECT_NEAR(std::abs(out[k] - ref), 0.0, 1e-10) << "n=" << n << " k=" << k;
    }
    std::vector<double> back(n);
    fft.inverse(out, back);
    for (std::size_t t = 0; t < n; ++t) EXPECT_NEAR(back[t], x[t], 1e-12);
  }
  EXPECT_THROW(RealFft(100), Error);
}

TEST(Stft, ZeroFrameZeroSpectrum) {
  AudioBuffer x{std::vector<double>(400, 0.0), 8000};
  Spectrogram s = stft(x, make_grid(x));
  EXPECT_EQ(s.nfft, 256u);
  EXPECT_EQ(s.num_bins, 129u);
  EXPECT_DOUBLE_EQ(s.bin_hz, 31.25);
  for (const auto& c : s.bins) EXPECT_EQ(std::abs(c), 0.0);
}

TEST(Stft, SineAtBinFrequencyPeaks) {
  const std::size_t k0 = 32;  // 1000 Hz at 8 kHz, nfft 256
  AudioBuffer x{synth::sine(8000, k0 * 31.25, 200), 8000};
  Spectrogram s = stft(x, make_grid(x));
  ASSERT_EQ(s.num_frames, 1u);
  const double peak = std::abs(s.at(0, k0));
  for (std::size_t k = 0; k < s.num_bins; ++k) {
    if (k == k0) continue;
    EXPECT_LT(std::abs(s.at(0, k)), peak);
    if (k + 2 <= k0 || k >= k0 + 2) {
      EXPECT_LT(20.0 * std::log10(std::abs(s.at(0, k)) / peak), -20.0) << k;
    }
  }
  const auto ref = oracle::magnitudes(x.samples, 256);
  for (std::size_t k = 0; k < s.num_bins; ++k) EXPECT_NEAR(std::abs(s.at(0, k)), ref[k], 1e-9);
}

TEST(Stft, Parseval) {
  std::mt19937_64 rng(13);
  AudioBuffer x{random_signal(rng, 2000), 8000};
  FrameGrid g = make_grid(x);
  Spectrogram s = stft(x, g);
  const auto w = hamming(g.frame_len);
  for (std::size_t m = 0; m < g.num_frames; ++m) {
    double time = 0.0;
    for (std::size_t n = 0; n < g.frame_len; ++n) {
      time += std::pow(x.samples[g.begin(m) + n] * w[n], 2);
    }
    // One-sided storage: interior bins count twice.
    double freq = std::norm(s.at(m, 0)) + std::norm(s.at(m, s.num_bins - 1));
    for (std::size_t k = 1; k + 1 < s.num_bins; ++k) freq += 2.0 * std::norm(s.at(m, k));
    EXPECT_NEAR(freq, s.nfft * time, 1e-6 * s.nfft * time);
  }
}

TEST(SpectralFlatness, FlatSpectrumIsOne) {
  std::vector<cplx> frame(129, cplx(0.3, 0.4));
  EXPECT_NEAR(spectral_flatness(frame), 1.0, 1e-12);
}

TEST(SpectralFlatness, SingleBinIsNearZero) {
  std::vector<cplx> frame(129, cplx{});
  frame[10] = 5.0;
  EXPECT_LT(spectral_flatness(frame), 0.01);
}

TEST(SpectralFlatness, WhiteNoiseMostlyNearOne) {
  std::mt19937_64 rng(14);
  AudioBuffer x{random_signal(rng, 80 * 99 + 200), 8000};
  FrameGrid g = make_grid(x);
  ASSERT_EQ(g.num_frames, 100u);
  auto sft = spectral_flatness(stft(x, g));
  std::nth_element(sft.begin(), sft.begin() + 50, sft.end());
  EXPECT_GT(sft[50], 0.5);
}

TEST(SpectralFlatness, BoundedAndMatchesOracleProperty) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> scale(1e-6, 10.0);
  for (int trial = 0; trial < 10; ++trial) {
    AudioBuffer x{random_signal(rng, 1200, scale(rng)), 8000};
    // A few silent and tonal stretches.
    std::fill(x.samples.begin(), x.samples.begin() + 250, 0.0);
    auto tone = synth::sine(8000, 440, 300);
    std::copy(tone.begin(), tone.end(), x.samples.begin() + 600);
    FrameGrid g = make_grid(x);
    auto sft = spectral_flatness(stft(x, g));
    for (std::size_t m = 0; m < g.num_frames; ++m) {
      EXPECT_GE(sft[m], 0.0);
      EXPECT_LE(sft[m], 1.0);
      std::vector<double> frame(x.samples.begin() + g.begin(m), x.samples.begin() + g.end(m));
      const double ref = oracle::flatness(oracle::magnitudes(frame, 256));
      EXPECT_NEAR(sft[m], ref, 1e-9 * ref);
    }
  }
}

}  // namespace
}  // namespace rvad
