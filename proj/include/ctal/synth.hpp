#pragma once

#include <string>
#include <vector>

#include "ctal/manifest.hpp"
#include "ctal/wav.hpp"

namespace ctal {

enum class SynthKind { Pairs, Emotion, Sentiment, Speaker };

SynthKind parse_synth_kind(const std::string& name);
std::string synth_kind_name(SynthKind kind);

// Toy paired corpus with a learnable cross-modal signal: every "speaker" is
// a fixed mixture of sinusoids, and each label modulates amplitude and
// tremolo tempo while planting a matching keyword in the transcript.
struct SynthConfig {
  SynthKind kind = SynthKind::Pairs;
  int n = 32;
  uint64_t seed = 42;
  int sample_rate = 16000;
  int num_speakers = 8;
  // Example indices start here; disjoint ranges under one seed share the
  // speaker voices but draw fresh utterances (i.i.d. splits).
  int first_index = 0;
};

struct SynthExample {
  Waveform wave;
  std::string transcript;
  std::string label;  // class name, score string, or speaker id; empty for Pairs
};

// Deterministic per (config, index).
SynthExample synth_example(const SynthConfig& cfg, int index);

// Writes wav/utt_NNNNN.wav files plus manifest.tsv; returns the entries.
std::vector<ManifestEntry> write_synth_corpus(const SynthConfig& cfg,
                                              const std::string& out_dir);

// The four emotion class names, index-aligned with the generator's labels.
const std::vector<std::string>& synth_emotion_classes();

}  // namespace ctal
