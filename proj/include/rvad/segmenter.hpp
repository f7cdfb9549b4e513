#pragma once

// Pitch segments and their extension into candidate speech regions.

#include <algorithm>
#include <cstddef>

#include "rvad/common.hpp"

namespace rvad {

// Maximal runs of consecutive voiced frames.
inline SegmentList group_pitch_segments(const FrameMask& voiced) { return mask_to_segments(voiced); }

// Widens every segment by `ext` frames on both sides (clipped to the
// utterance) and merges segments that overlap or touch afterwards.
inline SegmentList extend_segments(const SegmentList& segs, std::size_t ext, std::size_t num_frames) {
  SegmentList out;
  if (num_frames == 0) return out;
  SegmentList sorted = segs;
  std::sort(sorted.begin(), sorted.end(),
            [](const Segment& a, const Segment& b) { return a.start < b.start; });
  for (const auto& s : sorted) {
    Segment e{s.start > ext ? s.start - ext : 0, std::min(s.end + ext, num_frames - 1)};
    if (!out.empty() && e.start <= out.back().end + 1) {
      out.back().end = std::max(out.back().end, e.end);
    } else {
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace rvad
