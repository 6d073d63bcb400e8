#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ctal/errors.hpp"

namespace ctal {

// Architecture hyperparameters for both streams. Hidden size is shared
// (d_w = d_a = H) and must divide evenly over the attention heads.
struct ModelConfig {
  int layers = 3;        // N, per stream
  int heads = 12;        // A
  int hidden = 768;      // H
  int ffn_mult = 4;      // FFN inner size = ffn_mult * hidden
  int vocab_size = 10000;
  int max_text_len = 512;
  int max_audio_frames = 2048;
  int audio_dim = 160;
  double dropout = 0.1;
  double layer_norm_eps = 1e-5;
  double init_std = 0.02;
  bool tie_mlm = false;  // reuse the token embedding as the MLM output matrix

  int head_dim() const { return hidden / heads; }
  int ffn_dim() const { return ffn_mult * hidden; }

  void validate() const {
    if (hidden % heads != 0)
      throw ConfigError("hidden size " + std::to_string(hidden) +
                        " not divisible by heads " + std::to_string(heads));
    if (layers < 0 || heads < 1 || hidden < 1 || vocab_size < 1 || audio_dim < 1)
      throw ConfigError("model config has a non-positive dimension");
  }

  static ModelConfig base() { return ModelConfig{}; }

  static ModelConfig large() {
    ModelConfig c;
    c.layers = 6;
    return c;
  }

  // Desk-scale config for tests and toy runs.
  static ModelConfig tiny() {
    ModelConfig c;
    c.layers = 2;
    c.heads = 4;
    c.hidden = 64;
    c.vocab_size = 600;
    c.max_text_len = 64;
    c.max_audio_frames = 256;
    return c;
  }

  static ModelConfig preset(const std::string& name) {
    if (name == "base") return base();
    if (name == "large") return large();
    if (name == "tiny") return tiny();
    throw ConfigError("unknown model preset: " + name + " (expected base|large|tiny)");
  }
};

inline std::vector<std::pair<std::string, std::string>> model_config_kv(const ModelConfig& c) {
  auto s = [](auto v) { return std::to_string(v); };
  return {{"model.layers", s(c.layers)},
          {"model.heads", s(c.heads)},
          {"model.hidden", s(c.hidden)},
          {"model.ffn_mult", s(c.ffn_mult)},
          {"model.vocab_size", s(c.vocab_size)},
          {"model.max_text_len", s(c.max_text_len)},
          {"model.max_audio_frames", s(c.max_audio_frames)},
          {"model.audio_dim", s(c.audio_dim)},
          {"model.dropout", s(c.dropout)},
          {"model.tie_mlm", c.tie_mlm ? "true" : "false"}};
}

inline ModelConfig model_config_from_kv(
    const std::vector<std::pair<std::string, std::string>>& kv) {
  ModelConfig c;
  auto get = [&](const std::string& key) -> const std::string* {
    for (const auto& [k, v] : kv)
      if (k == key) return &v;
    return nullptr;
  };
  auto want = [&](const std::string& key) -> const std::string& {
    const std::string* v = get(key);
    if (!v) throw ConfigError("checkpoint config is missing " + key);
    return *v;
  };
  c.layers = std::stoi(want("model.layers"));
  c.heads = std::stoi(want("model.heads"));
  c.hidden = std::stoi(want("model.hidden"));
  c.ffn_mult = std::stoi(want("model.ffn_mult"));
  c.vocab_size = std::stoi(want("model.vocab_size"));
  c.max_text_len = std::stoi(want("model.max_text_len"));
  c.max_audio_frames = std::stoi(want("model.max_audio_frames"));
  c.audio_dim = std::stoi(want("model.audio_dim"));
  c.dropout = std::stod(want("model.dropout"));
  c.tie_mlm = want("model.tie_mlm") == "true";
  c.validate();
  return c;
}

}  // namespace ctal
