// Prints the speech segments of one WAV file in seconds.
//   sample_label_file input.wav [fast]

#include <cstdio>
#include <exception>
#include <string>

#include "rvad/rvad.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s input.wav [fast]\n", argv[0]);
    return 2;
  }
  rvad::RvadConfig cfg;
  if (argc > 2 && std::string(argv[2]) == "fast") cfg.mode = rvad::Mode::Fast;
  try {
    const rvad::VadResult r = rvad::run_rvad(rvad::read_wav(argv[1]), cfg);
    const double shift = cfg.frame_shift_ms / 1000.0;
    for (const auto& s : r.speech_segments) {
      std::printf("%.2f %.2f\n", s.start * shift, (s.end + 1) * shift);
    }
    std::fprintf(stderr, "%zu of %zu frames speech\n", rvad::count_true(r.labels),
                 r.labels.size());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  return 0;
}
