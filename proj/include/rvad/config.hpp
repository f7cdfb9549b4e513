#pragma once

// Every tunable constant of the pipeline with its default, plus a
// "key = value" text format for overriding them.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rvad/audio_io.hpp"
#include "rvad/common.hpp"
#include "rvad/denoise.hpp"

namespace rvad {

enum class Mode { Full, Fast };

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "full") return Mode::Full;
  if (s == "fast") return Mode::Fast;
  return std::nullopt;
}

inline const char* to_string(Mode m) { return m == Mode::Full ? "full" : "fast"; }
inline const char* to_string(HeThresholdBasis b) {
  return b == HeThresholdBasis::Distance ? "distance" : "energy";
}

struct RvadConfig {
  // framing and preprocessing
  double frame_len_ms = 25.0;
  double frame_shift_ms = 10.0;
  double hpf_cutoff_hz = 60.0;

  // first pass
  std::size_t super_len = 200;
  double noise_forget = 0.9;
  std::size_t smooth_n = 18;
  double alpha = 0.25;
  HeThresholdBasis he_threshold_basis = HeThresholdBasis::Distance;
  std::size_t min_pitch_frames = 2;

  // voicing
  Mode mode = Mode::Full;
  double theta_sft = 0.5;
  double pitch_f_min = 60.0;
  double pitch_f_max = 400.0;
  double pitch_rho = 0.6;

  // second pass
  EnhanceMethod enhance = EnhanceMethod::Msne;
  double msne_smoothing = 0.85;
  double msne_bias = 1.5;
  std::size_t msne_window = 150;
  double subtraction_floor = kSubtractionFloor;
  double low_band_hz = kLowBandHz;

  // segment VAD and post-processing
  std::size_t ext_frames = 60;
  double beta = 0.4;
  bool post_process = true;
  std::size_t pp_far_left = 33;
  std::size_t pp_far_right = 47;
  std::size_t pp_near_left = 5;
  std::size_t pp_near_right = 12;
  double energy_ratio = 0.05;

  AutocorrParams autocorr() const { return {pitch_f_min, pitch_f_max, pitch_rho, 1e-6}; }
  SecondPassOptions second_pass() const {
    return {enhance, {msne_smoothing, msne_bias, msne_window}, subtraction_floor, low_band_hz};
  }
};

inline void validate(const RvadConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("invalid config: ") + what);
  };
  require(c.frame_shift_ms > 0 && c.frame_len_ms >= c.frame_shift_ms,
          "frame_len_ms >= frame_shift_ms > 0");
  require(c.hpf_cutoff_hz > 0, "hpf_cutoff_hz > 0");
  require(c.super_len > 0, "super_len > 0");
  require(c.noise_forget >= 0 && c.noise_forget < 1, "0 <= noise_forget < 1");
  require(c.alpha > 0 && c.alpha <= 1, "0 < alpha <= 1");
  require(c.beta > 0, "beta > 0");
  require(c.theta_sft > 0 && c.theta_sft < 1, "0 < theta_sft < 1");
  require(c.pitch_f_min > 0 && c.pitch_f_min < c.pitch_f_max, "0 < pitch_f_min < pitch_f_max");
  require(c.pitch_rho > 0 && c.pitch_rho < 1, "0 < pitch_rho < 1");
  require(c.msne_smoothing >= 0 && c.msne_smoothing < 1, "0 <= msne_smoothing < 1");
  require(c.msne_bias >= 1, "msne_bias >= 1");
  require(c.msne_window > 0, "msne_window > 0");
  require(c.subtraction_floor >= 0, "subtraction_floor >= 0");
  require(c.energy_ratio >= 0, "energy_ratio >= 0");
}

namespace detail {

inline double parse_real(std::string_view key, std::string_view v) {
  std::string s(v);
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(out)) {
    throw Error("config key '" + std::string(key) + "': expected a number, got '" + s + "'");
  }
  return out;
}

inline std::size_t parse_count(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw Error("config key '" + std::string(key) + "': expected a non-negative integer, got '" +
                std::string(v) + "'");
  }
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config key '" + std::string(key) + "': expected a boolean, got '" + std::string(v) +
              "'");
}

template <typename T>
T parse_enum(std::string_view key, std::string_view v, std::optional<T> parsed) {
  if (!parsed) {
    throw Error("config key '" + std::string(key) + "': unknown value '" + std::string(v) + "'");
  }
  return *parsed;
}

inline std::string fmt_real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

struct ConfigField {
  std::string name;
  std::string help;
  std::function<void(RvadConfig&, std::string_view)> set;
  std::function<std::string(const RvadConfig&)> get;
};

inline const std::vector<ConfigField>& config_fields() {
  using detail::fmt_real;
  using detail::parse_count;
  using detail::parse_real;
#define RVAD_REAL(field, help)                                                              \
  ConfigField{#field, help,                                                                 \
              [](RvadConfig& c, std::string_view v) { c.field = parse_real(#field, v); }, \
              [](const RvadConfig& c) { return fmt_real(c.field); }}
#define RVAD_COUNT(field, help)                                                              \
  ConfigField{#field, help,                                                                  \
              [](RvadConfig& c, std::string_view v) { c.field = parse_count(#field, v); }, \
              [](const RvadConfig& c) { return std::to_string(c.field); }}
  static const std::vector<ConfigField> fields = {
      RVAD_REAL(frame_len_ms, "frame length in ms"),
      RVAD_REAL(frame_shift_ms, "frame shift in ms"),
      RVAD_REAL(hpf_cutoff_hz, "high-pass cutoff in Hz"),
      RVAD_COUNT(super_len, "frames per super-segment"),
      RVAD_REAL(noise_forget, "forgetting factor of the noise-energy tracker"),
      RVAD_COUNT(smooth_n, "half-width of the central smoother"),
      RVAD_REAL(alpha, "high-energy threshold factor"),
      ConfigField{"he_threshold_basis", "distance|energy",
                  [](RvadConfig& c, std::string_view v) {
                    c.he_threshold_basis = detail::parse_enum("he_threshold_basis", v,
                                                              parse_he_basis(v));
                  },
                  [](const RvadConfig& c) { return std::string(to_string(c.he_threshold_basis)); }},
      RVAD_COUNT(min_pitch_frames, "max voiced frames in a zeroed noise segment"),
      ConfigField{"mode", "full|fast",
                  [](RvadConfig& c, std::string_view v) {
                    c.mode = detail::parse_enum("mode", v, parse_mode(v));
                  },
                  [](const RvadConfig& c) { return std::string(to_string(c.mode)); }},
      RVAD_REAL(theta_sft, "spectral-flatness voicing threshold"),
      RVAD_REAL(pitch_f_min, "lowest pitch in Hz"),
      RVAD_REAL(pitch_f_max, "highest pitch in Hz"),
      RVAD_REAL(pitch_rho, "normalized autocorrelation voicing threshold"),
      ConfigField{"enhance", "none|msne|msne-mod",
                  [](RvadConfig& c, std::string_view v) {
                    c.enhance = detail::parse_enum("enhance", v, parse_enhance(v));
                  },
                  [](const RvadConfig& c) { return std::string(to_string(c.enhance)); }},
      RVAD_REAL(msne_smoothing, "periodogram smoothing factor"),
      RVAD_REAL(msne_bias, "noise bias compensation"),
      RVAD_COUNT(msne_window, "minimum search window in frames"),
      RVAD_REAL(subtraction_floor, "spectral subtraction floor"),
      RVAD_REAL(low_band_hz, "low band edge for msne-mod"),
      RVAD_COUNT(ext_frames, "pitch segment extension in frames"),
      RVAD_REAL(beta, "VAD threshold factor"),
      ConfigField{"post_process", "apply post-processing rules",
                  [](RvadConfig& c, std::string_view v) {
                    c.post_process = detail::parse_bool("post_process", v);
                  },
                  [](const RvadConfig& c) { return std::string(c.post_process ? "true" : "false"); }},
      RVAD_COUNT(pp_far_left, "non-speech beyond this many frames before a pitch segment"),
      RVAD_COUNT(pp_far_right, "non-speech beyond this many frames after a pitch segment"),
      RVAD_COUNT(pp_near_left, "speech within this many frames before a pitch segment"),
      RVAD_COUNT(pp_near_right, "speech within this many frames after a pitch segment"),
      RVAD_REAL(energy_ratio, "minimum segment energy relative to mean speech energy"),
  };
#undef RVAD_REAL
#undef RVAD_COUNT
  return fields;
}

inline std::string normalize_key(std::string_view key) {
  std::string k(key);
  for (char& ch : k) {
    if (ch == '-') ch = '_';
  }
  return k;
}

inline void set_config_value(RvadConfig& cfg, std::string_view key, std::string_view value) {
  const std::string k = normalize_key(key);
  for (const auto& f : config_fields()) {
    if (f.name == k) {
      f.set(cfg, value);
      return;
    }
  }
  throw Error("unknown config key '" + std::string(key) + "'");
}

// Lines of "key = value"; '#' starts a comment; values may be double-quoted.
inline void apply_config_text(RvadConfig& cfg, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    try {
      set_config_value(cfg, key, value);
    } catch (const Error& e) {
      throw Error("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline RvadConfig load_config(const std::string& path, RvadConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    apply_config_text(base, ss.str());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  return base;
}

inline std::string dump_config(const RvadConfig& cfg) {
  std::string out;
  for (const auto& f : config_fields()) out += f.name + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace rvad
