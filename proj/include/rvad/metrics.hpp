#pragma once

// Frame-level VAD scoring: miss and false-alarm rates, frame error rate and
// the detection cost function.

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "rvad/audio_io.hpp"
#include "rvad/common.hpp"

namespace rvad {

inline constexpr double kDefaultGamma = 0.25;

struct EvalCounts {
  std::size_t n_speech_ref = 0;
  std::size_t n_nonspeech_ref = 0;
  std::size_t n_miss = 0;  // reference speech, hypothesis non-speech
  std::size_t n_fa = 0;    // reference non-speech, hypothesis speech
  bool truncated = false;  // reference and hypothesis lengths differed

  std::size_t n_total() const { return n_speech_ref + n_nonspeech_ref; }

  EvalCounts& operator+=(const EvalCounts& o) {
    n_speech_ref += o.n_speech_ref;
    n_nonspeech_ref += o.n_nonspeech_ref;
    n_miss += o.n_miss;
    n_fa += o.n_fa;
    truncated = truncated || o.truncated;
    return *this;
  }
};

struct EvalResult {
  double p_miss = 0.0;  // percent
  double p_fa = 0.0;    // percent
  double fer = 0.0;     // percent
  double dcf = 0.0;     // in [0, 1]
  double gamma = kDefaultGamma;
  // Set when the corresponding reference class is empty and its rate was
  // reported as 0.
  bool no_speech_ref = false;
  bool no_nonspeech_ref = false;
};

// Compares the first min(|ref|, |hyp|) frames.
inline EvalCounts count_errors(const FrameMask& ref, const FrameMask& hyp) {
  if (ref.empty() && hyp.empty()) throw Error("cannot score two empty label sequences");
  EvalCounts c;
  const std::size_t n = std::min(ref.size(), hyp.size());
  c.truncated = ref.size() != hyp.size();
  for (std::size_t m = 0; m < n; ++m) {
    if (ref[m]) {
      ++c.n_speech_ref;
      if (!hyp[m]) ++c.n_miss;
    } else {
      ++c.n_nonspeech_ref;
      if (hyp[m]) ++c.n_fa;
    }
  }
  return c;
}

inline EvalResult rates(const EvalCounts& c, double gamma = kDefaultGamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma must lie in [0, 1]");
  EvalResult r;
  r.gamma = gamma;
  r.no_speech_ref = c.n_speech_ref == 0;
  r.no_nonspeech_ref = c.n_nonspeech_ref == 0;
  r.p_miss = r.no_speech_ref ? 0.0 : 100.0 * c.n_miss / static_cast<double>(c.n_speech_ref);
  r.p_fa = r.no_nonspeech_ref ? 0.0 : 100.0 * c.n_fa / static_cast<double>(c.n_nonspeech_ref);
  r.fer = c.n_total() == 0 ? 0.0
                           : 100.0 * static_cast<double>(c.n_miss + c.n_fa) /
                                 static_cast<double>(c.n_total());
  r.dcf = (1.0 - gamma) * r.p_miss / 100.0 + gamma * r.p_fa / 100.0;
  return r;
}

inline EvalResult score(const FrameMask& ref, const FrameMask& hyp, double gamma = kDefaultGamma) {
  return rates(count_errors(ref, hyp), gamma);
}

inline EvalResult score(const FrameLabels& ref, const FrameLabels& hyp,
                        double gamma = kDefaultGamma) {
  return score(ref.labels, hyp.labels, gamma);
}

struct AggregateResult {
  EvalCounts pooled_counts;
  EvalResult pooled;       // rates from pooled counts
  double macro_fer = 0.0;  // unweighted mean of per-file FER
  std::size_t num_files = 0;
};

inline AggregateResult aggregate(const std::vector<std::pair<EvalCounts, std::string>>& files,
                                 double gamma = kDefaultGamma) {
  if (files.empty()) throw Error("nothing to aggregate");
  AggregateResult a;
  a.num_files = files.size();
  double fer_sum = 0.0;
  for (const auto& [counts, id] : files) {
    a.pooled_counts += counts;
    fer_sum += rates(counts, gamma).fer;
  }
  a.pooled = rates(a.pooled_counts, gamma);
  a.macro_fer = fer_sum / static_cast<double>(files.size());
  return a;
}

}  // namespace rvad
