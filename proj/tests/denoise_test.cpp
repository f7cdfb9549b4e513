#include "rvad/denoise.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rvad/synth.hpp"

namespace rvad {
namespace {

FrameFeatures with_smoothed(std::vector<double> d_smooth) {
  FrameFeatures f;
  f.energy.assign(d_smooth.size(), 1.0);
  f.snr_db.assign(d_smooth.size(), 0.0);
  f.diff = d_smooth;
  f.diff_smooth = std::move(d_smooth);
  return f;
}

// Reference grouping: scan and open/close runs.
SegmentList brute_force_runs(const std::vector<double>& d, double theta) {
  SegmentList out;
  bool open = false;
  for (std::size_t m = 0; m < d.size(); ++m) {
    if (d[m] > theta && !open) {
      out.push_back({m, m});
      open = true;
    } else if (d[m] > theta) {
      out.back().end = m;
    } else {
      open = false;
    }
  }
  return out;
}

TEST(HighEnergy, ConstantIsOneSegment) {
  SegmentList s = detect_high_energy(with_smoothed(std::vector<double>(450, 3.0)));
  EXPECT_EQ(s, (SegmentList{{0, 449}}));
}

TEST(HighEnergy, AllZeroIsEmpty) {
  EXPECT_TRUE(detect_high_energy(with_smoothed(std::vector<double>(300, 0.0))).empty());
}

TEST(HighEnergy, PlateauMatchesBruteForce) {
  std::vector<double> d(200, 0.0);
  for (std::size_t m = 90; m < 100; ++m) d[m] = 4.0;
  d[50] = 0.5;  // below 0.25 * 4
  SegmentList s = detect_high_energy(with_smoothed(d));
  EXPECT_EQ(s, brute_force_runs(d, 1.0));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].length(), 10u);
}

TEST(HighEnergy, ThresholdPerSuperSegment) {
  std::vector<double> d(400, 0.0);
  d[10] = 100.0;
  d[20] = 20.0;   // < 25 in super-segment 0
  d[220] = 2.0;   // > 0.5 in super-segment 1
  d[230] = 0.4;
  EXPECT_EQ(detect_high_energy(with_smoothed(d)), (SegmentList{{10, 10}, {220, 220}}));
}

TEST(HighEnergy, EnergyBasis) {
  FrameFeatures f = with_smoothed(std::vector<double>(10, 1.0));
  f.energy.assign(10, 1.0);
  f.energy[3] = 100.0;  // threshold 25 -> nothing exceeds it
  EXPECT_TRUE(detect_high_energy(f, 200, 0.25, HeThresholdBasis::Energy).empty());
  EXPECT_EQ(detect_high_energy(f, 200, 0.25, HeThresholdBasis::Distance).size(), 1u);
}

TEST(FirstPass, ZeroesOnlyUnvoicedSegments) {
  std::mt19937_64 rng(41);
  AudioBuffer x{synth::white_noise(rng, 80 * 99 + 200, 0.3), 8000};
  FrameGrid g = make_grid(x);
  VoicingMask mask(g.num_frames, false);
  for (std::size_t m = 10; m < 13; ++m) mask[m] = true;  // 3 voiced frames in segment A
  mask[60] = true;                                          // 1 voiced frame in segment B
  SegmentList segs{{5, 20}, {55, 70}};
  FirstPassResult r = first_pass_denoise(x, g, segs, mask, 2);
  EXPECT_EQ(r.zeroed, (SegmentList{{55, 70}}));
  const std::size_t zb = g.begin(55), ze = g.end(70);
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (n >= zb && n < ze) {
      EXPECT_EQ(r.audio.samples[n], 0.0);
    } else {
      EXPECT_EQ(r.audio.samples[n], x.samples[n]);  // bit-exact
    }
  }
}

TEST(FirstPass, BurstBetweenTonesRemoved) {
  // tone | silence | noise burst | silence | tone, at 8 kHz.
  std::mt19937_64 rng(42);
  const int fs = 8000;
  auto tone1 = synth::harmonic_tone(fs, 150.0, 8000, 0.3);
  auto tone2 = synth::harmonic_tone(fs, 180.0, 8000, 0.3);
  const double burst_sigma = 2.0 * rms(tone1);  // 6 dB above speech RMS
  auto burst = synth::white_noise(rng, 3200, burst_sigma);
  std::vector<double> gap(4800, 0.0);
  AudioBuffer x{{}, fs};
  for (const auto* part : {&gap, &tone1, &gap, &burst, &gap, &tone2, &gap}) {
    x.samples.insert(x.samples.end(), part->begin(), part->end());
  }
  const std::size_t burst_begin = 2 * 4800 + 8000, burst_end = burst_begin + 3200;
  const std::size_t tone1_begin = 4800, tone2_begin = burst_end + 4800;

  AudioBuffer hp = highpass(x);
  FrameGrid g = make_grid(hp);
  FrameFeatures f = compute_features(frame_energy(hp, g), 200, 0.9, 18);
  SegmentList he = detect_high_energy(f);
  VoicingMask voiced = detect_pitch_autocorr(hp, g);
  FirstPassResult r = first_pass_denoise(hp, g, he, voiced, 2);
  ASSERT_FALSE(r.zeroed.empty());
  for (std::size_t n = burst_begin; n < burst_end; ++n) ASSERT_EQ(r.audio.samples[n], 0.0) << n;
  for (std::size_t n = tone1_begin; n < tone1_begin + 8000; ++n) {
    ASSERT_EQ(r.audio.samples[n], hp.samples[n]);
  }
  for (std::size_t n = tone2_begin; n < tone2_begin + 8000; ++n) {
    ASSERT_EQ(r.audio.samples[n], hp.samples[n]);
  }
}

TEST(SlidingMin, MatchesNaiveWindow) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SlidingMin sm(7);
  std::vector<double> seen;
  for (int i = 0; i < 200; ++i) {
    seen.push_back(u(rng));
    sm.push(seen.back());
    const std::size_t from = seen.size() > 7 ? seen.size() - 7 : 0;
    EXPECT_EQ(sm.min(), *std::min_element(seen.begin() + static_cast<std::ptrdiff_t>(from), seen.end()));
  }
}

TEST(Msne, AllZeroInputGivesZeroNoise) {
  MsneState s(129, {});
  std::vector<double> zero(129, 0.0);
  for (int m = 0; m < 20; ++m) s = msne_update(s, zero);
  for (double v : s.noise_power) EXPECT_EQ(v, 0.0);
}

TEST(Msne, LoudFrameDoesNotLiftMinimum) {
  MsneState s(4, {});
  std::vector<double> quiet(4, 1.0), loud(4, 1e6);
  for (int m = 0; m < 200; ++m) s.update(quiet);
  const auto before = s.noise_power;
  s.update(loud);
  EXPECT_EQ(s.noise_power, before);
  for (double v : s.noise_power) EXPECT_DOUBLE_EQ(v, 1.5);
}

TEST(Msne, ModFreezesOnZeroedFrames) {
  std::mt19937_64 rng(44);
  std::exponential_distribution<double> e(1.0);
  MsneState s(16, {});
  std::vector<double> p(16);
  for (int m = 0; m < 30; ++m) {
    for (auto& v : p) v = e(rng);
    s = msne_mod_update(s, p, false);
  }
  const MsneState frozen = msne_mod_update(s, std::vector<double>(16, 0.0), true);
  EXPECT_EQ(frozen, s);
  EXPECT_NE(msne_update(s, std::vector<double>(16, 0.0)), s);
}

TEST(Msne, BoundedByBiasedPeriodogramAndLinearInBiasProperty) {
  std::mt19937_64 rng(45);
  std::exponential_distribution<double> e(1.0);
  MsneParams p1, p2;
  p2.bias = 2.0 * p1.bias;
  MsneState a(33, p1), b(33, p2);
  std::vector<double> p(33);
  for (int m = 0; m < 400; ++m) {
    for (auto& v : p) v = e(rng) * (1 + m % 17);
    a.update(p);
    b.update(p);
    for (std::size_t k = 0; k < 33; ++k) {
      ASSERT_GE(a.noise_power[k], 0.0);
      ASSERT_LE(a.noise_power[k], p1.bias * a.p_smooth[k] * (1 + 1e-15));
      ASSERT_EQ(b.noise_power[k], 2.0 * a.noise_power[k]);
    }
  }
}

TEST(Msne, StationaryWhiteNoiseBand) {
  // Frozen from a 30-run Monte-Carlo: bin-averaged lambda / (sigma^2 sum w^2)
  // fell in [0.668, 0.725] after 300 frames.
  for (int run = 0; run < 30; ++run) {
    std::mt19937_64 rng(1000 + run);
    AudioBuffer x{synth::white_noise(rng, 80 * 299 + 200, 1.0), 8000};
    FrameGrid g = make_grid(x);
    Spectrogram s = stft(x, g);
    double window_gain = 0.0;
    for (double w : hamming(g.frame_len)) window_gain += w * w;
    MsneState st(s.num_bins, {});
    std::vector<double> p(s.num_bins);
    for (std::size_t m = 0; m < g.num_frames; ++m) {
      for (std::size_t k = 0; k < s.num_bins; ++k) p[k] = std::norm(s.at(m, k));
      st.update(p);
    }
    double mean = 0.0;
    for (std::size_t k = 1; k + 1 < s.num_bins; ++k) mean += st.noise_power[k] / window_gain;
    mean /= static_cast<double>(s.num_bins - 2);
    EXPECT_GT(mean, 0.60) << run;
    EXPECT_LT(mean, 0.80) << run;
  }
}

TEST(LowBand, ZeroedWhenDominant) {
  // 8 kHz, nfft 256: bins 0..6 lie below 217 Hz.
  std::vector<cplx> frame(129, cplx{});
  for (std::size_t k = 0; k < 7; ++k) frame[k] = std::sqrt(60.0 / 7.0);
  for (std::size_t k = 7; k < 11; ++k) frame[k] = std::sqrt(10.0);
  EXPECT_TRUE(suppress_low_band(frame, 31.25));
  for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(frame[k], cplx{});
  EXPECT_EQ(frame[7], std::sqrt(10.0));
}

TEST(LowBand, KeptWhenMinor) {
  std::vector<cplx> frame(129, cplx{});
  for (std::size_t k = 0; k < 7; ++k) frame[k] = std::sqrt(40.0 / 7.0);
  for (std::size_t k = 7; k < 13; ++k) frame[k] = std::sqrt(10.0);
  const auto before = frame;
  EXPECT_FALSE(suppress_low_band(frame, 31.25));
  EXPECT_EQ(frame, before);
}

Spectrogram random_spec(std::mt19937_64& rng, std::size_t frames, std::size_t bins) {
  std::normal_distribution<double> n(0.0, 1.0);
  Spectrogram s;
  s.num_frames = frames;
  s.num_bins = bins;
  s.nfft = 2 * (bins - 1);
  s.bin_hz = 8000.0 / s.nfft;
  s.bins.resize(frames * bins);
  for (auto& c : s.bins) c = cplx(n(rng), n(rng));
  return s;
}

TEST(SpectralSubtract, ZeroNoiseIsIdentity) {
  std::mt19937_64 rng(46);
  Spectrogram s = random_spec(rng, 5, 17);
  Spectrogram out = spectral_subtract(s, std::vector<double>(s.bins.size(), 0.0));
  for (std::size_t i = 0; i < s.bins.size(); ++i) EXPECT_NEAR(std::abs(out.bins[i] - s.bins[i]), 0.0, 1e-15);
}

TEST(SpectralSubtract, FloorEngagesAtEqualPower) {
  std::mt19937_64 rng(47);
  Spectrogram s = random_spec(rng, 3, 9);
  std::vector<double> noise(s.bins.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = std::norm(s.bins[i]);
  Spectrogram out = spectral_subtract(s, noise);
  for (std::size_t i = 0; i < noise.size(); ++i) {
    EXPECT_NEAR(std::norm(out.bins[i]), kSubtractionFloor * noise[i], 1e-12 * noise[i]);
    EXPECT_NEAR(std::arg(out.bins[i]), std::arg(s.bins[i]), 1e-12);
  }
}

TEST(SpectralSubtract, OutputPowerBoundsProperty) {
  std::mt19937_64 rng(48);
  std::exponential_distribution<double> e(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Spectrogram s = random_spec(rng, 10, 33);
    std::vector<double> noise(s.bins.size());
    for (auto& v : noise) v = 2.0 * e(rng);
    Spectrogram out = spectral_subtract(s, noise);
    for (std::size_t i = 0; i < noise.size(); ++i) {
      const double p = std::norm(out.bins[i]);
      EXPECT_GE(p, kSubtractionFloor * noise[i] * (1 - 1e-12));
      EXPECT_LE(p, std::norm(s.bins[i]) + kSubtractionFloor * noise[i] + 1e-12);
    }
  }
  EXPECT_THROW(spectral_subtract(random_spec(rng, 2, 5), std::vector<double>(3)), Error);
}

TEST(SpectralSubtract, OracleNoiseImprovesSnr) {
  std::mt19937_64 rng(49);
  const int fs = 8000;
  AudioBuffer clean{synth::sine(fs, 437.5, 16000, 0.3), fs};
  std::vector<double> noise = synth::white_noise(rng, clean.size(), 0.2);
  AudioBuffer noisy = clean;
  for (std::size_t i = 0; i < clean.size(); ++i) noisy.samples[i] += noise[i];
  FrameGrid g = make_grid(noisy);
  Spectrogram spec = stft(noisy, g);
  // True noise power per bin: sigma^2 * sum w^2.
  double gain = 0.0;
  for (double w : hamming(g.frame_len)) gain += w * w;
  std::vector<double> lambda(spec.bins.size(), 0.04 * gain);
  AudioBuffer enhanced = reconstruct(spectral_subtract(spec, lambda), g);
  auto snr = [&](const AudioBuffer& y) {
    double sig = 0.0, err = 0.0;
    for (std::size_t n = 400; n + 400 < y.size(); ++n) {
      sig += clean.samples[n] * clean.samples[n];
      err += std::pow(y.samples[n] - clean.samples[n], 2);
    }
    return 10.0 * std::log10(sig / err);
  };
  EXPECT_GT(snr(enhanced), snr(noisy));
}

TEST(Reconstruct, RoundTrip) {
  std::mt19937_64 rng(50);
  for (int fs : {8000, 16000}) {
    AudioBuffer x{synth::white_noise(rng, static_cast<std::size_t>(fs) + 123, 0.3), fs};
    FrameGrid g = make_grid(x);
    AudioBuffer y = reconstruct(stft(x, g), g);
    ASSERT_EQ(y.size(), x.size());
    EXPECT_EQ(y.sample_rate_hz, fs);
    double err = 0.0, ref = 0.0;
    for (std::size_t n = g.frame_len; n + g.frame_len < x.size(); ++n) {
      err += std::pow(y.samples[n] - x.samples[n], 2);
      ref += x.samples[n] * x.samples[n];
    }
    EXPECT_LT(std::sqrt(err / ref), 1e-6);
    // Whatever error exists sits in the first or last frame_len samples.
    for (std::size_t n = g.frame_len; n + g.frame_len < x.size(); ++n) {
      ASSERT_NEAR(y.samples[n], x.samples[n], 1e-9);
    }
  }
}

TEST(Reconstruct, ZeroSpectrogramZeroSignal) {
  AudioBuffer x{std::vector<double>(1000, 0.0), 8000};
  FrameGrid g = make_grid(x);
  for (double v : reconstruct(stft(x, g), g).samples) EXPECT_EQ(v, 0.0);
}

TEST(SecondPass, NoneIsIdentityAndModKeepsZeroedFramesZero) {
  std::mt19937_64 rng(51);
  AudioBuffer x{synth::white_noise(rng, 8000, 0.1), 8000};
  std::fill(x.samples.begin() + 2000, x.samples.begin() + 4000, 0.0);
  FrameGrid g = make_grid(x);
  SecondPassOptions none;
  none.method = EnhanceMethod::None;
  EXPECT_EQ(second_pass_denoise(x, g, {}, none).samples, x.samples);

  SecondPassOptions mod;
  mod.method = EnhanceMethod::MsneMod;
  std::vector<double> floor;
  // Frames 25..47 lie fully inside the zeroed stretch.
  AudioBuffer y = second_pass_denoise(x, g, {{25, 47}}, mod, &floor);
  ASSERT_EQ(floor.size(), g.num_frames * 129);
  for (std::size_t n = 2200; n < 3800; ++n) EXPECT_EQ(y.samples[n], 0.0) << n;
  // The estimate is carried through the frozen frames unchanged.
  for (std::size_t k = 0; k < 129; ++k) EXPECT_EQ(floor[25 * 129 + k], floor[24 * 129 + k]);
}

}  // namespace
}  // namespace rvad
