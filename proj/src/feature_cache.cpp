#include "ctal/feature_cache.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "ctal/errors.hpp"

namespace ctal {

namespace {
constexpr char kMagic[8] = {'C', 'T', 'A', 'L', 'F', 'E', 'A', 'T'};
constexpr uint16_t kVersion = 1;
}  // namespace

void write_feature_cache(const std::string& path, const AcousticFeatureSequence& seq) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot create feature cache: " + path);
  f.write(kMagic, 8);
  f.write(reinterpret_cast<const char*>(&kVersion), 2);
  const uint32_t t = static_cast<uint32_t>(seq.frames.rows());
  const uint32_t d = static_cast<uint32_t>(seq.frames.cols());
  f.write(reinterpret_cast<const char*>(&t), 4);
  f.write(reinterpret_cast<const char*>(&d), 4);
  f.write(reinterpret_cast<const char*>(seq.frames.data()),
          static_cast<std::streamsize>(sizeof(float) * t * d));
  if (!f) throw IoError("failed writing feature cache: " + path);
}

AcousticFeatureSequence read_feature_cache(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open feature cache: " + path);
  char magic[8];
  if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("bad feature cache magic in " + path);
  uint16_t version = 0;
  f.read(reinterpret_cast<char*>(&version), 2);
  if (version != kVersion)
    throw IoError("unsupported feature cache version " + std::to_string(version) + " in " + path);
  uint32_t t = 0, d = 0;
  f.read(reinterpret_cast<char*>(&t), 4);
  f.read(reinterpret_cast<char*>(&d), 4);
  if (!f) throw IoError("truncated feature cache header: " + path);
  AcousticFeatureSequence seq;
  seq.frames.resize(t, d);
  if (!f.read(reinterpret_cast<char*>(seq.frames.data()),
              static_cast<std::streamsize>(sizeof(float) * t * d)))
    throw IoError("truncated feature cache payload: " + path);
  seq.source = path;
  return seq;
}

std::string feature_cache_path(const std::string& feature_dir, const std::string& audio_path) {
  std::filesystem::path p(audio_path);
  return (std::filesystem::path(feature_dir) / (p.stem().string() + ".feat")).string();
}

}  // namespace ctal
