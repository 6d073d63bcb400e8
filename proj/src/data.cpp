#include "ctal/data.hpp"

#include <atomic>
#include <filesystem>

#include "ctal/errors.hpp"
#include "ctal/feature_cache.hpp"
#include "ctal/parallel.hpp"
#include "ctal/rng.hpp"

namespace ctal {

std::vector<LoadedExample> load_examples(const std::vector<ManifestEntry>& entries,
                                         const BbpeVocab& vocab, const FrontendConfig& fcfg,
                                         const std::string& feature_dir, int threads,
                                         long* skipped) {
  std::vector<LoadedExample> out(entries.size());
  std::vector<uint8_t> ok(entries.size(), 0);
  std::atomic<long> bad{0};

  parallel_items(static_cast<int>(entries.size()), threads, [&](int i, int) {
    const auto& e = entries[i];
    LoadedExample ex;
    ex.uid = hash_str(e.audio_path);
    ex.label = e.label;
    ex.ids = vocab.encode(e.transcript).ids;
    try {
      bool from_cache = false;
      if (!feature_dir.empty()) {
        const std::string cache = feature_cache_path(feature_dir, e.audio_path);
        if (std::filesystem::exists(cache)) {
          ex.features = read_feature_cache(cache).frames;
          from_cache = true;
        }
      }
      if (!from_cache) ex.features = extract(read_wav(e.audio_path), fcfg, e.audio_path).frames;
    } catch (const Error& err) {
      ++bad;
      log_warn("skipping " + e.audio_path + ": " + err.what());
      return;
    }
    out[i] = std::move(ex);
    ok[i] = 1;
  });

  std::vector<LoadedExample> kept;
  kept.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i)
    if (ok[i]) kept.push_back(std::move(out[i]));
  if (skipped) *skipped = bad.load();
  if (bad.load() > 0)
    log_warn(std::to_string(bad.load()) + " manifest entries skipped as unreadable");
  return kept;
}

}  // namespace ctal
