#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rvad {

// Thrown for malformed input files, precondition violations and I/O failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inclusive frame-index interval.
struct Segment {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t m) const { return m >= start && m <= end; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

// Sorted, disjoint segments.
using SegmentList = std::vector<Segment>;

// One boolean per frame. Used for voicing masks and speech labels alike.
using FrameMask = std::vector<bool>;

// Maximal runs of true entries.
inline SegmentList mask_to_segments(const FrameMask& mask) {
  SegmentList out;
  std::size_t m = 0;
  while (m < mask.size()) {
    if (!mask[m]) {
      ++m;
      continue;
    }
    std::size_t start = m;
    while (m < mask.size() && mask[m]) ++m;
    out.push_back({start, m - 1});
  }
  return out;
}

inline FrameMask segments_to_mask(const SegmentList& segs, std::size_t num_frames) {
  FrameMask mask(num_frames, false);
  for (const auto& s : segs) {
    if (s.start > s.end || s.end >= num_frames) {
      throw Error("segment [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                  "] outside " + std::to_string(num_frames) + " frames");
    }
    for (std::size_t m = s.start; m <= s.end; ++m) mask[m] = true;
  }
  return mask;
}

inline std::size_t count_true(const FrameMask& mask) {
  std::size_t n = 0;
  for (bool b : mask) n += b ? 1 : 0;
  return n;
}

}  // namespace rvad
