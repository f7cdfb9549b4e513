#pragma once

// WAV and frame-label file I/O, plus RMS-based noise mixing for building
// test corpora.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rvad/common.hpp"

namespace rvad {

// Mono signal with amplitudes nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 8000;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_sec() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

inline void check_finite(const AudioBuffer& audio) {
  if (audio.sample_rate_hz <= 0) throw Error("sample rate must be positive");
  for (double s : audio.samples) {
    if (!std::isfinite(s)) throw Error("audio contains non-finite samples");
  }
}

namespace detail {

inline std::uint32_t read_le(const unsigned char* p, int bytes) {
  std::uint32_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void put_le(std::string& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace detail

// Decodes a RIFF/WAVE byte string. Accepts 8/16-bit integer PCM and 32-bit
// IEEE float, any channel count; channels are averaged to mono.
inline AudioBuffer decode_wav(std::string_view bytes) {
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    throw Error("not a RIFF/WAVE file");
  }

  std::optional<std::uint16_t> format;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  std::optional<std::string_view> payload;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    std::string_view id = bytes.substr(pos, 4);
    std::uint32_t len = detail::read_le(data + pos + 4, 4);
    std::size_t body = pos + 8;
    // Truncated trailing data chunks are common in the wild; clamp them.
    std::size_t avail = std::min<std::size_t>(len, n - body);
    if (id == "fmt ") {
      if (avail < 16) throw Error("fmt chunk too short");
      format = static_cast<std::uint16_t>(detail::read_le(data + body, 2));
      channels = static_cast<std::uint16_t>(detail::read_le(data + body + 2, 2));
      rate = detail::read_le(data + body + 4, 4);
      bits = static_cast<std::uint16_t>(detail::read_le(data + body + 14, 2));
      if (*format == 0xFFFE && avail >= 26) {
        // WAVE_FORMAT_EXTENSIBLE: the sub-format GUID starts with the tag.
        format = static_cast<std::uint16_t>(detail::read_le(data + body + 24, 2));
      }
    } else if (id == "data") {
      payload = bytes.substr(body, avail);
    }
    pos = body + len + (len & 1);
  }

  if (!format) throw Error("missing fmt chunk");
  if (!payload) throw Error("missing data chunk");
  if (channels == 0) throw Error("zero channels");
  if (rate == 0) throw Error("zero sample rate");

  const bool pcm8 = *format == 1 && bits == 8;
  const bool pcm16 = *format == 1 && bits == 16;
  const bool f32 = *format == 3 && bits == 32;
  if (!pcm8 && !pcm16 && !f32) {
    throw Error("unsupported WAV encoding (format " + std::to_string(*format) + ", " +
                std::to_string(bits) + " bits)");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t num_frames = payload->size() / frame_bytes;
  const auto* p = reinterpret_cast<const unsigned char*>(payload->data());

  AudioBuffer out;
  out.sample_rate_hz = static_cast<int>(rate);
  out.samples.resize(num_frames);
  for (std::size_t i = 0; i < num_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = p + i * frame_bytes + c * bytes_per_sample;
      double v;
      if (pcm8) {
        v = (static_cast<int>(s[0]) - 128) / 128.0;
      } else if (pcm16) {
        auto raw = static_cast<std::int16_t>(detail::read_le(s, 2));
        v = raw / 32768.0;
      } else {
        std::uint32_t raw = detail::read_le(s, 4);
        float f;
        std::memcpy(&f, &raw, sizeof f);
        if (!std::isfinite(f)) throw Error("non-finite float sample");
        v = f;
      }
      acc += v;
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

inline AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_wav(ss.str());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline std::int16_t quantize16(double x) {
  x = std::clamp(x, -1.0, 1.0);
  long q = std::lround(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp<long>(q, -32768, 32767));
}

// 16-bit PCM mono.
inline std::string encode_wav(const AudioBuffer& audio) {
  check_finite(audio);
  const auto data_len = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  detail::put_le(out, 36 + data_len, 4);
  out += "WAVEfmt ";
  detail::put_le(out, 16, 4);
  detail::put_le(out, 1, 2);  // PCM
  detail::put_le(out, 1, 2);  // mono
  detail::put_le(out, static_cast<std::uint32_t>(audio.sample_rate_hz), 4);
  detail::put_le(out, static_cast<std::uint32_t>(audio.sample_rate_hz) * 2, 4);
  detail::put_le(out, 2, 2);
  detail::put_le(out, 16, 2);
  out += "data";
  detail::put_le(out, data_len, 4);
  for (double s : audio.samples) {
    detail::put_le(out, static_cast<std::uint16_t>(quantize16(s)), 2);
  }
  return out;
}

inline void write_wav(const std::string& path, const AudioBuffer& audio) {
  std::string bytes = encode_wav(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Frame labels

struct FrameLabels {
  FrameMask labels;
  double frame_shift_ms = 10.0;
  double frame_len_ms = 25.0;

  std::size_t size() const { return labels.size(); }
};

enum class LabelFormat { Frames, Segments };

inline std::optional<LabelFormat> parse_label_format(std::string_view s) {
  if (s == "frames") return LabelFormat::Frames;
  if (s == "segments") return LabelFormat::Segments;
  return std::nullopt;
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// First frame whose start time m*shift is >= t.
inline std::size_t first_frame_at_or_after(double t_sec, double shift_sec) {
  return static_cast<std::size_t>(std::ceil(t_sec / shift_sec - 1e-9));
}

}  // namespace detail

// Frames if the first non-blank line is a single token, Segments if it has
// two or more; nullopt for blank text.
inline std::optional<LabelFormat> detect_label_format(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    return t.find_first_of(" \t") == std::string::npos ? LabelFormat::Frames
                                                       : LabelFormat::Segments;
  }
  return std::nullopt;
}

// Parses either the per-frame "0"/"1" format or the "<start> <end>" segment
// format; the format is detected from the first non-blank line. In segment
// format, frame m is speech iff its start time m*shift lies in [start, end).
// When num_frames is given the result is padded or truncated to it.
inline FrameLabels parse_labels(std::string_view text,
                                std::optional<std::size_t> num_frames = std::nullopt,
                                double frame_shift_ms = 10.0, double frame_len_ms = 25.0) {
  FrameLabels out;
  out.frame_shift_ms = frame_shift_ms;
  out.frame_len_ms = frame_len_ms;

  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(detail::trim(text.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  const std::optional<LabelFormat> fmt = detect_label_format(text);

  if (fmt == LabelFormat::Frames) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i] == "0") {
        out.labels.push_back(false);
      } else if (lines[i] == "1") {
        out.labels.push_back(true);
      } else {
        throw Error("malformed frame label at line " + std::to_string(i + 1) + ": '" +
                    lines[i] + "'");
      }
    }
  } else if (fmt == LabelFormat::Segments) {
    const double shift = frame_shift_ms / 1000.0;
    double prev_end = 0.0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      std::istringstream ls(lines[i]);
      double start, end;
      std::string extra;
      if (!(ls >> start >> end) || (ls >> extra)) {
        throw Error("malformed segment at line " + std::to_string(i + 1) + ": '" + lines[i] +
                    "'");
      }
      if (!std::isfinite(start) || !std::isfinite(end) || start < 0 || end <= start) {
        throw Error("invalid segment times at line " + std::to_string(i + 1));
      }
      if (start < prev_end) {
        throw Error("non-monotone segment at line " + std::to_string(i + 1));
      }
      prev_end = end;
      std::size_t first = detail::first_frame_at_or_after(start, shift);
      std::size_t last = detail::first_frame_at_or_after(end, shift);
      if (out.labels.size() < last) out.labels.resize(last, false);
      for (std::size_t m = first; m < last; ++m) out.labels[m] = true;
    }
  }

  if (num_frames) out.labels.resize(*num_frames, false);
  return out;
}

inline FrameLabels read_labels(const std::string& path,
                               std::optional<std::size_t> num_frames = std::nullopt,
                               double frame_shift_ms = 10.0, double frame_len_ms = 25.0) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_labels(ss.str(), num_frames, frame_shift_ms, frame_len_ms);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline std::string format_labels(const FrameLabels& labels, LabelFormat fmt) {
  std::ostringstream out;
  if (fmt == LabelFormat::Frames) {
    for (bool b : labels.labels) out << (b ? "1\n" : "0\n");
    return out.str();
  }
  const double shift = labels.frame_shift_ms / 1000.0;
  out << std::fixed << std::setprecision(6);
  for (const auto& s : mask_to_segments(labels.labels)) {
    out << s.start * shift << ' ' << (s.end + 1) * shift << '\n';
  }
  return out.str();
}

inline void write_labels(const std::string& path, const FrameLabels& labels, LabelFormat fmt) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << format_labels(labels, fmt);
  if (!out) throw Error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Noise mixing

inline double power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

inline double rms(const std::vector<double>& x) { return std::sqrt(power(x)); }

// Noise tiled or truncated to `length` samples.
inline std::vector<double> fit_noise(const std::vector<double>& noise, std::size_t length) {
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = noise[i % noise.size()];
  return out;
}

// Returns clean + g * noise, with g chosen so that the whole-file RMS ratio of
// clean to the scaled noise equals snr_db. The RMS of the noise is measured
// over the tiled/truncated portion that is actually added.
inline AudioBuffer mix_noise(const AudioBuffer& clean, const AudioBuffer& noise, double snr_db) {
  if (clean.sample_rate_hz != noise.sample_rate_hz) {
    throw Error("sample-rate mismatch: " + std::to_string(clean.sample_rate_hz) + " vs " +
                std::to_string(noise.sample_rate_hz));
  }
  if (noise.empty() || rms(noise.samples) == 0.0) throw Error("noise is silent");
  if (clean.empty()) return clean;

  std::vector<double> fitted = fit_noise(noise.samples, clean.size());
  const double noise_rms = rms(fitted);
  if (noise_rms == 0.0) throw Error("noise is silent over the mixed span");
  const double gain = rms(clean.samples) / noise_rms * std::pow(10.0, -snr_db / 20.0);

  AudioBuffer out = clean;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += gain * fitted[i];
  return out;
}

}  // namespace rvad
