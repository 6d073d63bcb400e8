#include "ctal/manifest.hpp"

#include <fstream>

#include "ctal/errors.hpp"

namespace ctal {

std::vector<ManifestEntry> read_manifest(const std::string& path, bool labeled,
                                         long* skipped) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest: " + path);
  std::vector<ManifestEntry> out;
  long bad = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    if (t1 == std::string::npos) {
      ++bad;
      continue;
    }
    ManifestEntry e;
    e.audio_path = line.substr(0, t1);
    const auto t2 = line.find('\t', t1 + 1);
    if (labeled) {
      if (t2 == std::string::npos) {
        ++bad;
        continue;
      }
      e.transcript = line.substr(t1 + 1, t2 - t1 - 1);
      e.label = line.substr(t2 + 1);
    } else {
      e.transcript = t2 == std::string::npos ? line.substr(t1 + 1)
                                             : line.substr(t1 + 1, t2 - t1 - 1);
    }
    out.push_back(std::move(e));
  }
  if (skipped) *skipped = bad;
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries,
                    bool labeled) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot create manifest: " + path);
  for (const auto& e : entries) {
    f << e.audio_path << "\t" << e.transcript;
    if (labeled) f << "\t" << e.label;
    f << "\n";
  }
  if (!f) throw IoError("failed writing manifest: " + path);
}

}  // namespace ctal
