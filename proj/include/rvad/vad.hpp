#pragma once

// Segment-level VAD decisions, post-processing and the end-to-end pipeline.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rvad/audio_io.hpp"
#include "rvad/common.hpp"
#include "rvad/config.hpp"
#include "rvad/denoise.hpp"
#include "rvad/dsp.hpp"
#include "rvad/segmenter.hpp"
#include "rvad/snr_feature.hpp"
#include "rvad/voicing.hpp"

namespace rvad {

struct SegmentScores {
  double noise_energy = 0.0;
  std::vector<double> diff_smooth;
  double threshold = 0.0;
};

// Recomputes the SNR-weighted energy difference inside one extended pitch
// segment, with the segment's own 10%-rank noise energy, and the threshold
// beta * mean(smoothed difference over voiced frames).
inline SegmentScores segment_scores(std::span<const double> energy, const FrameMask& voiced,
                                    double beta, std::size_t smooth_n) {
  if (energy.empty()) throw Error("segment VAD on an empty segment");
  if (voiced.size() != energy.size()) throw Error("segment energy/voicing length mismatch");
  SegmentScores s;
  s.noise_energy = low_rank_value(energy);
  std::vector<double> snr(energy.size());
  for (std::size_t m = 0; m < energy.size(); ++m) snr[m] = snr_post_db(energy[m], s.noise_energy);
  s.diff_smooth = central_smooth(weighted_energy_difference(energy, snr), smooth_n);

  double acc = 0.0;
  std::size_t voiced_count = 0;
  for (std::size_t m = 0; m < energy.size(); ++m) {
    if (!voiced[m]) continue;
    acc += s.diff_smooth[m];
    ++voiced_count;
  }
  if (voiced_count == 0) throw Error("segment VAD on a segment without voiced frames");
  s.threshold = beta * acc / static_cast<double>(voiced_count);
  return s;
}

// Speech iff the smoothed difference is strictly above the threshold.
inline FrameMask segment_vad(std::span<const double> energy, const FrameMask& voiced, double beta,
                             std::size_t smooth_n) {
  const SegmentScores s = segment_scores(energy, voiced, beta, smooth_n);
  FrameMask out(energy.size());
  for (std::size_t m = 0; m < energy.size(); ++m) out[m] = s.diff_smooth[m] > s.threshold;
  return out;
}

// Raw decisions for every extended segment; frames outside them are non-speech.
inline FrameMask vad_over_segments(std::span<const double> energy, const FrameMask& voiced,
                                   const SegmentList& extended, double beta,
                                   std::size_t smooth_n) {
  FrameMask labels(energy.size(), false);
  for (const auto& seg : extended) {
    const auto begin = static_cast<std::ptrdiff_t>(seg.start);
    const auto end = static_cast<std::ptrdiff_t>(seg.end + 1);
    FrameMask seg_voiced(voiced.begin() + begin, voiced.begin() + end);
    FrameMask seg_labels =
        segment_vad(energy.subspan(seg.start, seg.length()), seg_voiced, beta, smooth_n);
    std::copy(seg_labels.begin(), seg_labels.end(), labels.begin() + begin);
  }
  return labels;
}

struct PostProcessRules {
  std::size_t far_left = 33;
  std::size_t far_right = 47;
  std::size_t near_left = 5;
  std::size_t near_right = 12;
  double energy_ratio = 0.05;
};

inline PostProcessRules post_process_rules(const RvadConfig& c) {
  return {c.pp_far_left, c.pp_far_right, c.pp_near_left, c.pp_near_right, c.energy_ratio};
}

// 1. Frames too far from any pitch segment become non-speech.
// 2. Pitch frames and frames just before/after a pitch segment become speech.
// 3. Speech segments whose mean energy is below energy_ratio times the mean
//    energy of all speech frames are dropped.
inline FrameMask post_process(const FrameMask& raw, const SegmentList& pitch_segs,
                              std::span<const double> energy, const PostProcessRules& r) {
  const std::size_t n = raw.size();
  if (energy.size() != n) throw Error("post-processing length mismatch");
  FrameMask labels = raw;
  const FrameMask inside = segments_to_mask(pitch_segs, n);

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> after_prev(n, kNone);  // frames since previous segment end
  std::vector<std::size_t> before_next(n, kNone);  // frames until next segment start
  for (std::size_t m = 0, last_end = kNone; m < n; ++m) {
    if (inside[m]) {
      last_end = m;
    } else if (last_end != kNone) {
      after_prev[m] = m - last_end;
    }
  }
  for (std::size_t i = n, next_start = kNone; i-- > 0;) {
    if (inside[i]) {
      next_start = i;
    } else if (next_start != kNone) {
      before_next[i] = next_start - i;
    }
  }

  for (std::size_t m = 0; m < n; ++m) {
    if (inside[m]) {
      labels[m] = true;
      continue;
    }
    const bool far_from_next = before_next[m] == kNone || before_next[m] > r.far_left;
    const bool far_from_prev = after_prev[m] == kNone || after_prev[m] > r.far_right;
    if (far_from_next && far_from_prev) labels[m] = false;
    const bool near_next = before_next[m] != kNone && before_next[m] <= r.near_left;
    const bool near_prev = after_prev[m] != kNone && after_prev[m] <= r.near_right;
    if (near_next || near_prev) labels[m] = true;
  }

  const SegmentList speech = mask_to_segments(labels);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : speech) {
    for (std::size_t m = s.start; m <= s.end; ++m) total += energy[m];
    count += s.length();
  }
  if (count == 0) return labels;
  const double mean_all = total / static_cast<double>(count);
  for (const auto& s : speech) {
    double seg_total = 0.0;
    for (std::size_t m = s.start; m <= s.end; ++m) seg_total += energy[m];
    if (seg_total / static_cast<double>(s.length()) < r.energy_ratio * mean_all) {
      for (std::size_t m = s.start; m <= s.end; ++m) labels[m] = false;
    }
  }
  return labels;
}

struct VadResult {
  FrameMask labels;
  SegmentList speech_segments;
  FrameGrid grid;

  // Intermediate products, kept for inspection and testing.
  VoicingMask voicing;
  SegmentList high_energy;
  SegmentList zeroed;
  SegmentList pitch_segments;
  SegmentList extended_segments;
  FrameMask raw_labels;
  std::vector<double> denoised_energy;
  std::optional<AudioBuffer> first_pass;
  std::optional<AudioBuffer> denoised;

  FrameLabels frame_labels(const RvadConfig& cfg) const {
    return {labels, cfg.frame_shift_ms, cfg.frame_len_ms};
  }
};

// highpass -> frames -> first-pass features -> high-energy segments ->
// voicing -> zero noise segments -> spectral subtraction -> energies of the
// denoised signal -> extended pitch segments -> per-segment VAD ->
// post-processing.
//
// `voicing_override`, when given, replaces the built-in voicing detector.
inline VadResult run_rvad(const AudioBuffer& input, const RvadConfig& cfg,
                          const std::optional<VoicingMask>& voicing_override = std::nullopt) {
  validate(cfg);
  check_finite(input);
  VadResult r;
  const AudioBuffer audio = highpass(input, cfg.hpf_cutoff_hz);
  r.grid = make_grid(audio, cfg.frame_len_ms, cfg.frame_shift_ms);
  const std::size_t num_frames = r.grid.num_frames;
  if (num_frames == 0) return r;

  const FrameFeatures features = compute_features(frame_energy(audio, r.grid), cfg.super_len,
                                                  cfg.noise_forget, cfg.smooth_n);
  r.high_energy = detect_high_energy(features, cfg.super_len, cfg.alpha, cfg.he_threshold_basis);

  if (voicing_override) {
    if (voicing_override->size() != num_frames) {
      throw Error("voicing mask has " + std::to_string(voicing_override->size()) +
                  " frames, expected " + std::to_string(num_frames));
    }
    r.voicing = *voicing_override;
  } else if (cfg.mode == Mode::Fast) {
    r.voicing = detect_sft(stft(audio, r.grid), cfg.theta_sft);
  } else {
    r.voicing = detect_pitch_autocorr(audio, r.grid, cfg.autocorr());
  }

  FirstPassResult first =
      first_pass_denoise(audio, r.grid, r.high_energy, r.voicing, cfg.min_pitch_frames);
  r.zeroed = std::move(first.zeroed);
  // Pitch frames inside a segment classified as noise are not speech anchors.
  for (const auto& s : r.zeroed) {
    for (std::size_t m = s.start; m <= s.end; ++m) r.voicing[m] = false;
  }

  AudioBuffer denoised = second_pass_denoise(first.audio, r.grid, r.zeroed, cfg.second_pass());
  r.denoised_energy = frame_energy(denoised, r.grid);

  r.pitch_segments = group_pitch_segments(r.voicing);
  r.extended_segments = extend_segments(r.pitch_segments, cfg.ext_frames, num_frames);
  r.raw_labels =
      vad_over_segments(r.denoised_energy, r.voicing, r.extended_segments, cfg.beta, cfg.smooth_n);
  r.labels = cfg.post_process ? post_process(r.raw_labels, r.pitch_segments, r.denoised_energy,
                                             post_process_rules(cfg))
                              : r.raw_labels;
  r.speech_segments = mask_to_segments(r.labels);
  r.first_pass = std::move(first.audio);
  r.denoised = std::move(denoised);
  return r;
}

struct BatchEntry {
  std::string path;
  std::optional<VadResult> result;
  std::string error;

  bool ok() const { return result.has_value(); }
};

// Runs every file on up to `workers` threads. Output order follows the input;
// a failing file yields an entry with `error` set instead of aborting.
inline std::vector<BatchEntry> run_batch(const std::vector<std::string>& paths,
                                         const RvadConfig& cfg, std::size_t workers = 1,
                                         bool keep_audio = false) {
  std::vector<BatchEntry> out(paths.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < paths.size(); i = next++) {
      out[i].path = paths[i];
      try {
        VadResult r = run_rvad(read_wav(paths[i]), cfg);
        if (!keep_audio) {
          r.first_pass.reset();
          r.denoised.reset();
        }
        out[i].result = std::move(r);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(paths.size(), 1));
  if (workers == 1) {
    work();
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace rvad
