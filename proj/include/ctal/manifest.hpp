#pragma once

#include <string>
#include <vector>

namespace ctal {

// One line of a dataset manifest: "audio_path<TAB>transcript[<TAB>label]".
struct ManifestEntry {
  std::string audio_path;
  std::string transcript;
  std::string label;  // empty for pre-training manifests
};

// Reads a manifest; lines with too few fields are counted in *skipped and
// dropped (the caller decides whether to warn).
std::vector<ManifestEntry> read_manifest(const std::string& path, bool labeled,
                                         long* skipped = nullptr);

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries,
                    bool labeled);

}  // namespace ctal
