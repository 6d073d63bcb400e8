#include "ctal/run_config.hpp"

#include <fstream>
#include <sstream>

#include "ctal/errors.hpp"

namespace ctal {

const std::vector<ConfigKey>& RunConfig::registry() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "42", "global RNG seed; plans, init and data order derive from it"},
      {"threads", "1", "worker cap for batch items and feature extraction; 1 = fully sequential"},

      {"model.preset", "tiny", "base | large | tiny; fills the model.* keys below"},
      {"model.layers", "", "override: encoder layers per stream (N)"},
      {"model.heads", "", "override: attention heads (A)"},
      {"model.hidden", "", "override: hidden size (H)"},
      {"model.ffn_mult", "", "override: feed-forward inner multiple"},
      {"model.vocab_size", "", "override: token vocabulary size"},
      {"model.max_text_len", "", "override: position table length, text"},
      {"model.max_audio_frames", "", "override: position table length, audio"},
      {"model.dropout", "", "override: dropout rate"},
      {"model.tie_mlm", "", "override: tie MLM output matrix to the token embedding (true/false)"},

      {"audio.sample_rate", "16000", "target sample rate; inputs are resampled to it"},
      {"audio.frame_ms", "50", "frame width in milliseconds"},
      {"audio.step_ms", "12.5", "frame step in milliseconds"},
      {"audio.num_mel", "80", "Mel filter count (feature dim is twice this)"},

      {"tokenizer.path", "", "trained vocab file (required by commands that tokenize)"},
      {"data.manifest", "", "training manifest: audio<TAB>transcript[<TAB>label]"},
      {"data.eval_manifest", "", "held-out manifest for evaluation"},
      {"data.feature_dir", "", "directory of .feat caches; empty = extract on the fly"},
      {"out.dir", "run", "run directory for config echo, logs, checkpoints, reports"},

      {"pretrain.steps", "2000", "optimizer steps"},
      {"pretrain.batch_size", "16", "pairs per step"},
      {"pretrain.lr", "5e-5", "peak learning rate (Adam)"},
      {"pretrain.warmup_frac", "0.1", "fraction of steps spent in linear warmup"},
      {"pretrain.checkpoint_every", "1000", "steps between checkpoint files"},

      {"masking.contiguous_replacement", "true",
       "MCAM replace action copies one contiguous span (false = independent frames)"},

      {"finetune.task", "emotion", "emotion | sentiment | speaker"},
      {"finetune.lr", "1e-5", "peak learning rate (AdamW, cosine-annealed to finetune.min_lr)"},
      {"finetune.min_lr", "0", "cosine annealing floor"},
      {"finetune.epochs", "20", "passes over the training manifest"},
      {"finetune.batch_size", "4", "examples per step"},
      {"finetune.orth_weight", "1.0", "weight of the orthogonality regularizer"},
      {"finetune.weight_decay", "0.01", "AdamW decoupled weight decay"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : registry()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  it->second = value;
  explicit_[key] = true;
}

void RunConfig::set_kv(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("expected key=value, got '" + assignment + "'");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::string line;
  long lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    try {
      set_kv(line.substr(start));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string RunConfig::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  return it->second;
}

long RunConfig::integer(const std::string& key) const {
  const std::string v = str(key);
  try {
    size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " expects an integer, got '" + v + "'");
  }
}

double RunConfig::real(const std::string& key) const {
  const std::string v = str(key);
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " expects a number, got '" + v + "'");
  }
}

bool RunConfig::boolean(const std::string& key) const {
  const std::string v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + key + " expects true/false, got '" + v + "'");
}

std::string RunConfig::dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << "=" << v << "\n";
  return os.str();
}

}  // namespace ctal
