#include "ctal/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ctal/errors.hpp"
#include "ctal/rng.hpp"

namespace ctal {

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "pairs") return SynthKind::Pairs;
  if (name == "emotion") return SynthKind::Emotion;
  if (name == "sentiment") return SynthKind::Sentiment;
  if (name == "speaker") return SynthKind::Speaker;
  throw ConfigError("unknown synth kind: " + name +
                    " (expected pairs|emotion|sentiment|speaker)");
}

std::string synth_kind_name(SynthKind kind) {
  switch (kind) {
    case SynthKind::Pairs: return "pairs";
    case SynthKind::Emotion: return "emotion";
    case SynthKind::Sentiment: return "sentiment";
    case SynthKind::Speaker: return "speaker";
  }
  return "?";
}

const std::vector<std::string>& synth_emotion_classes() {
  static const std::vector<std::string> classes = {"angry", "happy", "neutral", "sad"};
  return classes;
}

namespace {

const std::vector<std::string>& speaker_names() {
  static const std::vector<std::string> names = {"ada",  "ben",  "cleo", "dan",
                                                 "eva",  "finn", "gia",  "hugo",
                                                 "iris", "jack", "kira", "liam"};
  return names;
}

constexpr int kPartials = 10;

struct SpeakerVoice {
  double freqs[kPartials];
  double amps[kPartials];
};

// Distinct spectral signature per speaker, stable under the corpus seed.
// A harmonic stack keeps most Mel bins carrying coherent energy.
SpeakerVoice speaker_voice(const SynthConfig& cfg, int speaker) {
  Rng rng(split_seed(cfg.seed, 0xabcd0000u + static_cast<uint64_t>(speaker)));
  SpeakerVoice v;
  double base = 170.0 + uniform_real(rng, 0.0, 220.0);
  for (int i = 0; i < kPartials; ++i) {
    v.freqs[i] = base * (i + 1) * uniform_real(rng, 0.99, 1.01);
    v.amps[i] = uniform_real(rng, 0.5, 1.0) / std::sqrt(i + 1.0);
  }
  return v;
}

// Label -> audio modulation. Amplitude and tremolo tempo separate the four
// classes; sentiment interpolates the same knobs continuously.
struct Modulation {
  double amplitude;
  double tremolo_hz;
  double tremolo_depth;
};

Modulation emotion_modulation(int cls) {
  switch (cls) {
    case 0: return {0.95, 11.0, 0.9};  // angry: loud, fast flutter
    case 1: return {0.75, 6.0, 0.7};   // happy
    case 2: return {0.50, 2.5, 0.3};   // neutral
    default: return {0.28, 1.0, 0.15}; // sad: quiet, nearly flat
  }
}

std::string sentiment_keyword(double score) {
  if (score < -1.8) return "terrible";
  if (score < -0.6) return "bad";
  if (score < 0.6) return "plain";
  if (score < 1.8) return "good";
  return "great";
}

const std::vector<std::string>& templates() {
  static const std::vector<std::string> t = {
      "NAME sounds KW in the recording",
      "today NAME feels KW about everything",
      "the voice of NAME turned KW again",
      "we heard NAME speaking in a KW tone",
      "listeners called the clip from NAME very KW",
  };
  return t;
}

std::string spell_digits(int value) {
  static const char* words[10] = {"zero", "one", "two",   "three", "four",
                                  "five", "six", "seven", "eight", "nine"};
  std::string out;
  for (char c : std::to_string(value)) {
    if (!out.empty()) out += " ";
    out += words[c - '0'];
  }
  return out;
}

std::string fill_template(Rng& rng, const std::string& name, const std::string& kw,
                          int index) {
  std::string text = templates()[uniform_int(rng, 0, static_cast<int>(templates().size()) - 1)];
  const auto np = text.find("NAME");
  text.replace(np, 4, name);
  const auto kp = text.find("KW");
  text.replace(kp, 2, kw);
  // a spelled-out take number keeps every transcript distinct
  text += " take " + spell_digits(index);
  return text;
}

}  // namespace

SynthExample synth_example(const SynthConfig& cfg, int index) {
  if (cfg.num_speakers < 2 || cfg.num_speakers > static_cast<int>(speaker_names().size()))
    throw ConfigError("synth: num_speakers must be in [2, " +
                      std::to_string(speaker_names().size()) + "]");
  Rng rng(split_seed(cfg.seed, static_cast<uint64_t>(index)));
  const int speaker = index % cfg.num_speakers;
  const SpeakerVoice voice = speaker_voice(cfg, speaker);
  const std::string& name = speaker_names()[speaker];

  // Balanced labels, decorrelated from the speaker cycle so voice identity
  // never predicts the class.
  int emotion = (index + index / cfg.num_speakers) % 4;
  double score = 0.0;
  Modulation mod{};
  std::string keyword;
  switch (cfg.kind) {
    case SynthKind::Pairs:
    case SynthKind::Emotion:
      mod = emotion_modulation(emotion);
      keyword = synth_emotion_classes()[emotion];
      break;
    case SynthKind::Sentiment: {
      score = uniform_real(rng, -3.0, 3.0);
      const double t = (score + 3.0) / 6.0;
      mod.amplitude = 0.2 + 0.75 * t;
      mod.tremolo_hz = 1.0 + 10.0 * t;
      mod.tremolo_depth = 0.2 + 0.6 * t;
      keyword = sentiment_keyword(score);
      break;
    }
    case SynthKind::Speaker:
      mod = emotion_modulation(uniform_int(rng, 0, 3));
      keyword = synth_emotion_classes()[uniform_int(rng, 0, 3)];
      break;
  }

  const double dur = 0.9 + uniform_real(rng, 0.0, 0.35);
  const int n = static_cast<int>(dur * cfg.sample_rate);
  SynthExample ex;
  ex.wave.sample_rate = cfg.sample_rate;
  ex.wave.samples.resize(n);
  double phase[kPartials];
  for (int j = 0; j < kPartials; ++j) phase[j] = uniform_real(rng, 0, 2 * M_PI);
  double amp_norm = 0.0;
  for (int j = 0; j < kPartials; ++j) amp_norm += voice.amps[j];
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / cfg.sample_rate;
    double s = 0.0;
    for (int j = 0; j < kPartials; ++j)
      s += voice.amps[j] * std::sin(2 * M_PI * voice.freqs[j] * t + phase[j]);
    const double trem =
        1.0 - mod.tremolo_depth * 0.5 * (1.0 + std::sin(2 * M_PI * mod.tremolo_hz * t));
    const double edge = std::min({1.0, i / (0.02 * cfg.sample_rate),
                                  (n - 1 - i) / (0.02 * cfg.sample_rate)});
    s = s / amp_norm * mod.amplitude * trem * edge;
    ex.wave.samples[i] = static_cast<float>(std::clamp(s, -1.0, 1.0));
  }

  ex.transcript = fill_template(rng, name, keyword, index);
  switch (cfg.kind) {
    case SynthKind::Pairs: break;
    case SynthKind::Emotion: ex.label = synth_emotion_classes()[emotion]; break;
    case SynthKind::Sentiment: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f", score);
      ex.label = buf;
      break;
    }
    case SynthKind::Speaker: {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "spk%02d", speaker);
      ex.label = buf;
      break;
    }
  }
  return ex;
}

std::vector<ManifestEntry> write_synth_corpus(const SynthConfig& cfg,
                                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "wav");
  std::vector<ManifestEntry> entries;
  entries.reserve(cfg.n);
  for (int j = 0; j < cfg.n; ++j) {
    const int i = cfg.first_index + j;
    SynthExample ex = synth_example(cfg, i);
    char fname[32];
    std::snprintf(fname, sizeof(fname), "utt_%05d.wav", i);
    const std::string path = (fs::path(out_dir) / "wav" / fname).string();
    write_wav(path, ex.wave);
    entries.push_back({path, ex.transcript, ex.label});
  }
  write_manifest((fs::path(out_dir) / "manifest.tsv").string(), entries,
                 cfg.kind != SynthKind::Pairs);
  return entries;
}

}  // namespace ctal
