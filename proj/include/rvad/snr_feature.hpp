#pragma once

// A posteriori SNR weighted energy difference and the super-segment noise
// energy tracker that feeds it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rvad/common.hpp"

namespace rvad {

inline constexpr double kEnergyFloor = 1e-12;

// Value at 1-based rank ceil(fraction * n) of the ascending sort.
inline double low_rank_value(std::span<const double> values, double fraction = 0.10) {
  if (values.empty()) throw Error("rank statistic of an empty set");
  std::vector<double> sorted(values.begin(), values.end());
  const double pos = std::ceil(fraction * static_cast<double>(sorted.size()) - 1e-9);
  const std::size_t rank = std::clamp<std::size_t>(static_cast<std::size_t>(pos), 1, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

struct NoiseEnergyTrack {
  std::vector<double> raw;       // e_v(p), one per super-segment
  std::vector<double> smoothed;  // recursively smoothed e_v(p)
  std::size_t super_len = 200;

  std::size_t super_segment_of(std::size_t m) const { return m / super_len; }
  double at_frame(std::size_t m) const { return smoothed[super_segment_of(m)]; }
};

// Splits frames into super-segments of super_len (the last one may be short),
// takes the 10%-rank energy of each and smooths across super-segments with the
// forgetting factor.
inline NoiseEnergyTrack track_noise_energy(std::span<const double> energy,
                                           std::size_t super_len = 200, double forget = 0.9,
                                           double rank_fraction = 0.10) {
  if (energy.empty()) throw Error("noise tracking needs at least one frame");
  if (super_len == 0) throw Error("super-segment length must be positive");
  NoiseEnergyTrack track;
  track.super_len = super_len;
  for (std::size_t begin = 0; begin < energy.size(); begin += super_len) {
    const std::size_t len = std::min(super_len, energy.size() - begin);
    track.raw.push_back(low_rank_value(energy.subspan(begin, len), rank_fraction));
  }
  track.smoothed.resize(track.raw.size());
  track.smoothed[0] = track.raw[0];
  for (std::size_t p = 1; p < track.raw.size(); ++p) {
    track.smoothed[p] = forget * track.smoothed[p - 1] + (1.0 - forget) * track.raw[p];
  }
  return track;
}

inline double snr_post_db(double energy, double noise_energy) {
  return 10.0 * std::log10(std::max(energy, kEnergyFloor) / std::max(noise_energy, kEnergyFloor));
}

inline std::vector<double> snr_post(std::span<const double> energy, const NoiseEnergyTrack& track) {
  std::vector<double> out(energy.size());
  for (std::size_t m = 0; m < energy.size(); ++m) out[m] = snr_post_db(energy[m], track.at_frame(m));
  return out;
}

// d(m) = sqrt(|e(m) - e(m-1)| * max(snr(m), 0)), d(0) = 0.
inline std::vector<double> weighted_energy_difference(std::span<const double> energy,
                                                      std::span<const double> snr_db) {
  if (energy.size() != snr_db.size()) throw Error("energy/SNR length mismatch");
  std::vector<double> d(energy.size(), 0.0);
  for (std::size_t m = 1; m < energy.size(); ++m) {
    d[m] = std::sqrt(std::abs(energy[m] - energy[m - 1]) * std::max(snr_db[m], 0.0));
  }
  return d;
}

// Mean over [m-N, m+N] clipped to the sequence, divided by the in-range count.
inline std::vector<double> central_smooth(std::span<const double> d, std::size_t half_width) {
  const std::size_t len = d.size();
  std::vector<double> out(len, 0.0);
  for (std::size_t m = 0; m < len; ++m) {
    const std::size_t lo = m > half_width ? m - half_width : 0;
    const std::size_t hi = std::min(len - 1, m + half_width);
    double acc = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) acc += d[i];
    out[m] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

struct FrameFeatures {
  std::vector<double> energy;
  std::vector<double> snr_db;
  std::vector<double> diff;         // d(m)
  std::vector<double> diff_smooth;  // central-smoothed d(m)

  std::size_t size() const { return energy.size(); }
};

// Features with noise energy from the super-segment tracker.
inline FrameFeatures compute_features(std::vector<double> energy, std::size_t super_len,
                                      double forget, std::size_t smooth_n,
                                      NoiseEnergyTrack* track_out = nullptr) {
  FrameFeatures f;
  f.energy = std::move(energy);
  if (f.energy.empty()) return f;
  NoiseEnergyTrack track = track_noise_energy(f.energy, super_len, forget);
  f.snr_db = snr_post(f.energy, track);
  f.diff = weighted_energy_difference(f.energy, f.snr_db);
  f.diff_smooth = central_smooth(f.diff, smooth_n);
  if (track_out) *track_out = std::move(track);
  return f;
}

}  // namespace rvad
