// Generates noisy synthetic utterances and scores both detector modes.

#include <cstdio>
#include <random>

#include "rvad/rvad.hpp"

using namespace rvad;

int main() {
  std::mt19937_64 rng(7);
  for (double snr : {20.0, 10.0, 0.0}) {
    EvalCounts full, fast;
    for (int i = 0; i < 20; ++i) {
      const synth::Utterance u = synth::make_utterance(rng);
      const AudioBuffer noise{synth::white_noise(rng, u.audio.size(), 1.0), 8000};
      const AudioBuffer x = mix_noise(u.audio, noise, snr);
      RvadConfig cfg;
      const VadResult a = run_rvad(x, cfg);
      cfg.mode = Mode::Fast;
      const VadResult b = run_rvad(x, cfg);
      const FrameMask ref = synth::reference_labels(u, a.grid);
      full += count_errors(ref, a.labels);
      fast += count_errors(ref, b.labels);
    }
    const EvalResult rf = rates(full), rs = rates(fast);
    std::printf("%5.1f dB  full FER %6.2f%% (miss %5.2f, fa %5.2f)   fast FER %6.2f%% (miss %5.2f, fa %5.2f)\n",
                snr, rf.fer, rf.p_miss, rf.p_fa, rs.fer, rs.p_miss, rs.p_fa);
  }
}
