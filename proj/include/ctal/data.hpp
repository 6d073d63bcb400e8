#pragma once

#include <string>
#include <vector>

#include "ctal/audio_frontend.hpp"
#include "ctal/bbpe.hpp"
#include "ctal/manifest.hpp"
#include "ctal/tensor.hpp"

namespace ctal {

// A tokenized, feature-extracted (audio, text[, label]) example.
struct LoadedExample {
  uint64_t uid = 0;  // stable per utterance (hash of the audio path)
  std::vector<int> ids;
  MatX<float> features;
  std::string label;
};

// Tokenizes transcripts and loads features, preferring .feat caches under
// feature_dir when present. Unreadable entries are skipped and counted.
std::vector<LoadedExample> load_examples(const std::vector<ManifestEntry>& entries,
                                         const BbpeVocab& vocab, const FrontendConfig& fcfg,
                                         const std::string& feature_dir, int threads,
                                         long* skipped = nullptr);

}  // namespace ctal
