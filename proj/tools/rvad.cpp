// rvad command-line front end: vad, denoise, eval, synth.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rvad/rvad.hpp"

namespace fs = std::filesystem;
using namespace rvad;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFileFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : Error {
  using Error::Error;
};

void warn(const std::string& msg) { std::cerr << "rvad: " << msg << "\n"; }

// Flags for every config field, applied after the config file.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  bool print_config = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    app->add_flag("--print-config", print_config, "print the effective config to stderr");
    for (const auto& f : config_fields()) {
      std::string flag = "--" + f.name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      std::string name = f.name;
      app->add_option_function<std::string>(
          flag, [this, name](const std::string& v) { values[name] = v; }, f.help);
    }
  }

  RvadConfig resolve() const {
    RvadConfig cfg;
    try {
      if (!config_path.empty()) cfg = load_config(config_path, cfg);
      for (const auto& [k, v] : values) set_config_value(cfg, k, v);
      validate(cfg);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (print_config) std::cerr << dump_config(cfg);
    return cfg;
  }
};

bool has_wav_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".wav";
}

// One path per line; blank lines and '#' comments skipped.
std::vector<std::string> read_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open list " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string t = detail::trim(line);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<std::string> expand_inputs(const std::string& in) {
  if (has_wav_extension(in)) return {in};
  return read_list(in);
}

// ---------------------------------------------------------------------------
// vad

struct VadArgs {
  std::string in;
  std::string out;
  std::string labels = "frames";
  std::string voicing_file;
  std::size_t workers = 1;
  ConfigFlags config;
};

int run_vad(const VadArgs& a) {
  const RvadConfig cfg = a.config.resolve();
  const LabelFormat fmt = *parse_label_format(a.labels);
  const std::vector<std::string> inputs = expand_inputs(a.in);
  if (inputs.empty()) throw UsageError("no input files");
  if (!a.voicing_file.empty() && inputs.size() != 1) {
    throw UsageError("--voicing-file needs a single WAV input");
  }

  std::map<std::string, std::string> stems;
  for (const auto& p : inputs) {
    const std::string stem = fs::path(p).stem().string();
    auto [it, fresh] = stems.emplace(stem, p);
    if (!fresh && it->second != p) {
      throw UsageError("inputs " + it->second + " and " + p + " share the output name " + stem);
    }
  }
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (!fs::is_directory(a.out)) throw UsageError("cannot create output directory " + a.out);

  std::vector<BatchEntry> results;
  if (!a.voicing_file.empty()) {
    BatchEntry e{inputs[0], std::nullopt, {}};
    try {
      AudioBuffer audio = read_wav(inputs[0]);
      const FrameGrid g = make_grid(audio, cfg.frame_len_ms, cfg.frame_shift_ms);
      e.result = run_rvad(audio, cfg, read_voicing_file(a.voicing_file, g.num_frames));
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    results.push_back(std::move(e));
  } else {
    results = run_batch(inputs, cfg, a.workers);
  }

  const char* ext = fmt == LabelFormat::Frames ? ".lab" : ".seg";
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (!r.ok()) {
      warn(r.path + ": " + r.error);
      ++failed;
      continue;
    }
    const fs::path dest = fs::path(a.out) / (fs::path(r.path).stem().string() + ext);
    try {
      write_labels(dest.string(), r.result->frame_labels(cfg), fmt);
    } catch (const std::exception& ex) {
      warn(r.path + ": " + ex.what());
      ++failed;
    }
  }
  std::cerr << "rvad vad: " << results.size() - failed << "/" << results.size()
            << " files labelled\n";
  return failed == 0 ? kExitOk : kExitFileFailure;
}

// ---------------------------------------------------------------------------
// denoise

struct DenoiseArgs {
  std::string in;
  std::string out;
  std::string noise_floor_csv;
  ConfigFlags config;
};

void write_noise_floor(const std::string& path, const std::vector<double>& floor,
                       std::size_t num_bins, double bin_hz) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "frame";
  for (std::size_t k = 0; k < num_bins; ++k) out << ',' << k * bin_hz;
  out << '\n' << std::setprecision(9);
  for (std::size_t m = 0; m * num_bins < floor.size(); ++m) {
    out << m;
    for (std::size_t k = 0; k < num_bins; ++k) out << ',' << floor[m * num_bins + k];
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

int run_denoise(const DenoiseArgs& a) {
  const RvadConfig cfg = a.config.resolve();
  if (!a.noise_floor_csv.empty() && cfg.enhance == EnhanceMethod::None) {
    throw UsageError("--dump-noise-floor needs --enhance msne or msne-mod");
  }
  try {
    const VadResult r = run_rvad(read_wav(a.in), cfg);
    if (!r.first_pass) {
      warn(a.in + ": shorter than one frame, nothing to denoise");
      return kExitFileFailure;
    }
    std::vector<double> floor;
    const AudioBuffer out =
        second_pass_denoise(*r.first_pass, r.grid, r.zeroed, cfg.second_pass(), &floor);
    write_wav(a.out, out);
    if (!a.noise_floor_csv.empty()) {
      const Spectrogram shape = empty_spectrogram(r.grid, out.sample_rate_hz);
      write_noise_floor(a.noise_floor_csv, floor, shape.num_bins, shape.bin_hz);
    }
    std::cerr << "rvad denoise: " << r.zeroed.size() << " noise segments zeroed, "
              << to_string(cfg.enhance) << " applied\n";
  } catch (const std::exception& ex) {
    warn(a.in + ": " + ex.what());
    return kExitFileFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string ref;
  std::string hyp;
  double gamma = kDefaultGamma;
  std::string report = "csv";
  std::string out;
  double frame_shift_ms = 10.0;
};

// (id, ref path, hyp path); hyp path empty when no match was found.
using Pairing = std::vector<std::tuple<std::string, std::string, std::string>>;

Pairing pair_inputs(const std::string& ref, const std::string& hyp) {
  Pairing out;
  if (fs::is_directory(ref) != fs::is_directory(hyp)) {
    throw UsageError("--ref and --hyp must both be directories or both be files");
  }
  if (fs::is_directory(ref)) {
    std::map<std::string, std::vector<fs::path>> hyp_by_stem;
    for (const auto& e : fs::directory_iterator(hyp)) {
      if (e.is_regular_file()) hyp_by_stem[e.path().stem().string()].push_back(e.path());
    }
    std::vector<fs::path> refs;
    for (const auto& e : fs::directory_iterator(ref)) {
      if (e.is_regular_file()) refs.push_back(e.path());
    }
    std::sort(refs.begin(), refs.end());
    for (const auto& r : refs) {
      const std::string stem = r.stem().string();
      auto it = hyp_by_stem.find(stem);
      std::string match;
      if (it != hyp_by_stem.end()) {
        match = it->second.front().string();
        for (const auto& h : it->second) {
          if (h.extension() == r.extension()) match = h.string();
        }
      }
      out.emplace_back(stem, r.string(), match);
    }
    return out;
  }
  // A pair of list files, or a pair of label files.
  const bool ref_is_list = fs::path(ref).extension() == ".list" ||
                           fs::path(ref).extension() == ".lst" ||
                           fs::path(ref).extension() == ".scp";
  if (!ref_is_list) {
    out.emplace_back(fs::path(ref).stem().string(), ref, hyp);
    return out;
  }
  const auto refs = read_list(ref);
  const auto hyps = read_list(hyp);
  if (refs.size() != hyps.size()) {
    throw UsageError("ref list has " + std::to_string(refs.size()) + " entries, hyp list has " +
                     std::to_string(hyps.size()));
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    out.emplace_back(fs::path(refs[i]).stem().string(), refs[i], hyps[i]);
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Segment files carry no length; they take the length of the frame-format
// side, or the longer of the two when both are segment files.
std::pair<FrameLabels, FrameLabels> load_pair(const std::string& ref_path,
                                              const std::string& hyp_path, double shift_ms) {
  const std::string ref_text = slurp(ref_path), hyp_text = slurp(hyp_path);
  auto parse = [&](const std::string& text, const std::string& path,
                   std::optional<std::size_t> n) {
    try {
      return parse_labels(text, n, shift_ms);
    } catch (const Error& e) {
      throw Error(path + ": " + e.what());
    }
  };
  FrameLabels ref = parse(ref_text, ref_path, std::nullopt);
  FrameLabels hyp = parse(hyp_text, hyp_path, std::nullopt);
  const bool ref_seg = detect_label_format(ref_text) == LabelFormat::Segments;
  const bool hyp_seg = detect_label_format(hyp_text) == LabelFormat::Segments;
  if (ref_seg && hyp_seg) {
    const std::size_t n = std::max(ref.size(), hyp.size());
    ref.labels.resize(n, false);
    hyp.labels.resize(n, false);
  } else if (ref_seg) {
    ref.labels.resize(hyp.size(), false);
  } else if (hyp_seg) {
    hyp.labels.resize(ref.size(), false);
  }
  return {std::move(ref), std::move(hyp)};
}

struct ReportWriter {
  std::ostream& os;
  std::string kind;

  void header() {
    if (kind == "csv") os << "file,n_frames,p_miss,p_fa,fer,dcf\n";
    if (kind == "tsv") os << "file\tn_frames\tp_miss\tp_fa\tfer\tdcf\n";
  }

  void row(const std::string& id, const EvalCounts& c, const EvalResult& r) {
    if (kind == "json-lines") {
      nlohmann::ordered_json j = {{"file", id},      {"n_frames", c.n_total()}, {"p_miss", r.p_miss},
                          {"p_fa", r.p_fa},  {"fer", r.fer},            {"dcf", r.dcf}};
      os << j.dump() << '\n';
      return;
    }
    const char sep = kind == "csv" ? ',' : '\t';
    std::string name = id;
    if (kind == "csv" && name.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char ch : name) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      name = q + "\"";
    }
    os << name << sep << c.n_total() << std::fixed << std::setprecision(4) << sep << r.p_miss
       << sep << r.p_fa << sep << r.fer << std::setprecision(6) << sep << r.dcf
       << std::defaultfloat << '\n';
  }
};

int run_eval(const EvalArgs& a) {
  if (!(a.gamma >= 0.0 && a.gamma <= 1.0)) throw UsageError("--gamma must lie in [0, 1]");
  const Pairing pairs = pair_inputs(a.ref, a.hyp);
  if (pairs.empty()) throw UsageError("no reference files found");

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw UsageError("cannot write " + a.out);
  }
  ReportWriter w{a.out.empty() ? std::cout : file, a.report};
  w.header();

  std::vector<std::pair<EvalCounts, std::string>> scored;
  std::size_t failed = 0;
  for (const auto& [id, ref_path, hyp_path] : pairs) {
    if (hyp_path.empty()) {
      warn(id + ": no hypothesis file");
      ++failed;
      continue;
    }
    try {
      auto [ref, hyp] = load_pair(ref_path, hyp_path, a.frame_shift_ms);
      const EvalCounts c = count_errors(ref.labels, hyp.labels);
      if (c.truncated) {
        warn(id + ": length mismatch, scored first " + std::to_string(c.n_total()) + " frames");
      }
      const EvalResult r = rates(c, a.gamma);
      if (r.no_speech_ref) warn(id + ": reference has no speech frames, p_miss reported as 0");
      if (r.no_nonspeech_ref) warn(id + ": reference has no non-speech frames, p_fa reported as 0");
      w.row(id, c, r);
      scored.emplace_back(c, id);
    } catch (const std::exception& ex) {
      warn(id + ": " + ex.what());
      ++failed;
    }
  }
  if (!scored.empty()) {
    const AggregateResult agg = aggregate(scored, a.gamma);
    w.row("ALL", agg.pooled_counts, agg.pooled);
    std::cerr << "rvad eval: " << agg.num_files << " files, pooled FER " << std::fixed
              << std::setprecision(4) << agg.pooled.fer << ", macro FER " << agg.macro_fer
              << "\n";
  }
  return failed == 0 ? kExitOk : kExitFileFailure;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  std::size_t count = 10;
  std::uint64_t seed = 1;
  std::optional<double> snr_db;
  int sample_rate = 8000;
};

int run_synth(const SynthArgs& a) {
  const fs::path wav_dir = fs::path(a.out) / "wav", ref_dir = fs::path(a.out) / "ref";
  std::error_code ec;
  fs::create_directories(wav_dir, ec);
  fs::create_directories(ref_dir, ec);
  if (!fs::is_directory(wav_dir) || !fs::is_directory(ref_dir)) {
    throw UsageError("cannot create output directories under " + a.out);
  }
  std::mt19937_64 rng(a.seed);
  synth::UtteranceParams p;
  p.sample_rate_hz = a.sample_rate;
  std::ofstream list(fs::path(a.out) / "wav.list");
  for (std::size_t i = 0; i < a.count; ++i) {
    synth::Utterance u = synth::make_utterance(rng, p);
    AudioBuffer audio = u.audio;
    if (a.snr_db) {
      AudioBuffer noise{synth::white_noise(rng, audio.size(), 1.0), a.sample_rate};
      audio = mix_noise(audio, noise, *a.snr_db);
    }
    std::ostringstream name;
    name << "utt" << std::setw(4) << std::setfill('0') << i;
    const fs::path wav = wav_dir / (name.str() + ".wav");
    write_wav(wav.string(), audio);
    FrameLabels ref{synth::reference_labels(u, make_grid(audio)), 10.0, 25.0};
    write_labels((ref_dir / (name.str() + ".lab")).string(), ref, LabelFormat::Frames);
    list << wav.string() << '\n';
  }
  std::cerr << "rvad synth: wrote " << a.count << " utterances to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rvad: robust voice activity detection"};
  app.require_subcommand(1);

  VadArgs vad;
  auto* vad_cmd = app.add_subcommand("vad", "label speech frames in WAV files");
  vad_cmd->add_option("--in", vad.in, "WAV file, or a list file with one WAV path per line")
      ->required();
  vad_cmd->add_option("--out", vad.out, "output directory for label files")->required();
  vad_cmd->add_option("--labels", vad.labels, "frames|segments")
      ->check(CLI::IsMember({"frames", "segments"}));
  vad_cmd->add_option("--voicing-file", vad.voicing_file,
                      "per-frame 0/1 voicing mask replacing the built-in detector")
      ->check(CLI::ExistingFile);
  vad_cmd->add_option("--workers", vad.workers, "parallel files")->check(CLI::PositiveNumber);
  vad.config.attach(vad_cmd);

  DenoiseArgs den;
  auto* den_cmd = app.add_subcommand("denoise", "write the two-pass denoised signal");
  den_cmd->add_option("--in", den.in, "input WAV")->required()->check(CLI::ExistingFile);
  den_cmd->add_option("--out", den.out, "output WAV (16-bit PCM)")->required();
  den_cmd->add_option("--dump-noise-floor", den.noise_floor_csv,
                      "CSV of the per-frame, per-bin noise power estimate");
  den.config.attach(den_cmd);

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "score hypothesis labels against references");
  ev_cmd->add_option("--ref", ev.ref, "reference label directory, list (.list) or file")
      ->required()
      ->check(CLI::ExistingPath);
  ev_cmd->add_option("--hyp", ev.hyp, "hypothesis label directory, list (.list) or file")
      ->required()
      ->check(CLI::ExistingPath);
  ev_cmd->add_option("--gamma", ev.gamma, "miss/false-alarm weight of the DCF");
  ev_cmd->add_option("--report", ev.report, "csv|tsv|json-lines")
      ->check(CLI::IsMember({"csv", "tsv", "json-lines"}));
  ev_cmd->add_option("--out", ev.out, "report file (default stdout)");
  ev_cmd->add_option("--frame-shift-ms", ev.frame_shift_ms, "frame shift for segment labels")
      ->check(CLI::PositiveNumber);

  SynthArgs syn;
  auto* syn_cmd = app.add_subcommand("synth", "generate a synthetic corpus: <out>/wav, <out>/ref labels, <out>/wav.list");
  syn_cmd->add_option("--out", syn.out, "output directory")->required();
  syn_cmd->add_option("--count", syn.count, "number of utterances");
  syn_cmd->add_option("--seed", syn.seed, "random seed");
  syn_cmd->add_option("--snr-db", syn.snr_db, "add white noise at this SNR");
  syn_cmd->add_option("--sample-rate", syn.sample_rate, "Hz")->check(CLI::Range(4000, 192000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*vad_cmd) return run_vad(vad);
    if (*den_cmd) return run_denoise(den);
    if (*ev_cmd) return run_eval(ev);
    if (*syn_cmd) return run_synth(syn);
  } catch (const UsageError& e) {
    warn(e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    warn(e.what());
    return kExitFileFailure;
  }
  return kExitUsage;
}
