#pragma once

#include <string>

#include "ctal/audio_frontend.hpp"

namespace ctal {

// Per-utterance binary cache: magic "CTALFEAT", version u16, T u32, dim u32,
// then row-major little-endian f32 payload.
void write_feature_cache(const std::string& path, const AcousticFeatureSequence& seq);
AcousticFeatureSequence read_feature_cache(const std::string& path);

// Cache file naming: <dir>/<stem of audio path>.feat
std::string feature_cache_path(const std::string& feature_dir, const std::string& audio_path);

}  // namespace ctal
