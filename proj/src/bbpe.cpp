#include "ctal/bbpe.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "ctal/errors.hpp"

namespace ctal {

const char* Specials::name(int id) {
  switch (id) {
    case kBos: return "<s>";
    case kEos: return "</s>";
    case kMask: return "<mask>";
    case kPad: return "<pad>";
    default: return "?";
  }
}

namespace {

// Pack an id pair for hashing.
inline uint64_t pack(int a, int b) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

std::string escape_bytes(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (c > 0x20 && c < 0x7f && c != '\\') {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[5];
      std::snprintf(buf, sizeof(buf), "\\x%02x", c);
      out += buf;
    }
  }
  return out;
}

std::string unescape_bytes(const std::string& s, const std::string& path) {
  std::string out;
  for (size_t i = 0; i < s.size();) {
    if (s[i] == '\\') {
      if (i + 3 >= s.size() || s[i + 1] != 'x')
        throw IoError("malformed escape in vocab file " + path);
      out.push_back(static_cast<char>(std::stoi(s.substr(i + 2, 2), nullptr, 16)));
      i += 4;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> BbpeVocab::split_chunks(const std::string& text) {
  std::vector<std::string> chunks;
  const size_t n = text.size();
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    if (text[i] == ' ' && i + 1 < n && text[i + 1] != ' ') {
      j = i + 1;  // leading space attaches to the following word
      while (j < n && text[j] != ' ') ++j;
    } else if (text[i] == ' ') {
      while (j < n && text[j] == ' ') ++j;
    } else {
      while (j < n && text[j] != ' ') ++j;
    }
    chunks.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return chunks;
}

BbpeVocab BbpeVocab::byte_only() {
  BbpeVocab v;
  v.token_bytes_.resize(Specials::kBaseVocab);
  for (int b = 0; b < 256; ++b)
    v.token_bytes_[Specials::kByteBase + b] = std::string(1, static_cast<char>(b));
  return v;
}

BbpeVocab BbpeVocab::train(const std::vector<std::string>& corpus, int vocab_size) {
  if (corpus.empty()) throw Error("train_bbpe: empty corpus");
  if (vocab_size < Specials::kBaseVocab)
    throw Error("train_bbpe: vocab_size must be at least " +
                std::to_string(Specials::kBaseVocab));
  BbpeVocab v = byte_only();
  const int target_merges = vocab_size - Specials::kBaseVocab;

  // Collapse the corpus into unique chunks with multiplicities.
  std::unordered_map<std::string, long> chunk_count;
  for (const auto& line : corpus)
    for (auto& c : split_chunks(line)) ++chunk_count[c];

  struct Work {
    std::vector<int> sym;
    long count;
  };
  std::vector<Work> work;
  work.reserve(chunk_count.size());
  for (auto& [chunk, count] : chunk_count) {
    Work w;
    w.count = count;
    for (unsigned char c : chunk) w.sym.push_back(Specials::kByteBase + c);
    work.push_back(std::move(w));
  }

  for (int m = 0; m < target_merges; ++m) {
    std::unordered_map<uint64_t, long> pair_count;
    for (const auto& w : work)
      for (size_t i = 0; i + 1 < w.sym.size(); ++i)
        pair_count[pack(w.sym[i], w.sym[i + 1])] += w.count;

    long best_count = 0;
    int best_a = -1, best_b = -1;
    for (const auto& [key, count] : pair_count) {
      if (count < 2) continue;
      const int a = static_cast<int>(key >> 32);
      const int b = static_cast<int>(key & 0xffffffffu);
      if (count > best_count) {
        best_count = count;
        best_a = a;
        best_b = b;
      } else if (count == best_count) {
        // deterministic tie-break: lexicographically smallest byte pair
        auto cand = std::make_pair(v.token_bytes_[a], v.token_bytes_[b]);
        auto cur = std::make_pair(v.token_bytes_[best_a], v.token_bytes_[best_b]);
        if (cand < cur) {
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a < 0) break;  // no pair repeats

    const int new_id = static_cast<int>(v.token_bytes_.size());
    v.token_bytes_.push_back(v.token_bytes_[best_a] + v.token_bytes_[best_b]);
    v.merges_.emplace_back(best_a, best_b);
    for (auto& w : work) {
      size_t out = 0;
      for (size_t i = 0; i < w.sym.size();) {
        if (i + 1 < w.sym.size() && w.sym[i] == best_a && w.sym[i + 1] == best_b) {
          w.sym[out++] = new_id;
          i += 2;
        } else {
          w.sym[out++] = w.sym[i++];
        }
      }
      w.sym.resize(out);
    }
  }
  v.rebuild_ranks();
  return v;
}

std::vector<int> BbpeVocab::encode_chunk(const std::string& chunk) const {
  std::vector<int> sym;
  sym.reserve(chunk.size());
  for (unsigned char c : chunk) sym.push_back(Specials::kByteBase + c);

  while (sym.size() > 1 && !ranks_.empty()) {
    int best_rank = -1;
    for (size_t i = 0; i + 1 < sym.size(); ++i) {
      auto it = ranks_.find(pack(sym[i], sym[i + 1]));
      if (it != ranks_.end() && (best_rank < 0 || it->second < best_rank))
        best_rank = it->second;
    }
    if (best_rank < 0) break;
    const int merged = Specials::kBaseVocab + best_rank;
    // merge every occurrence of this pair, left to right
    std::vector<int> next;
    next.reserve(sym.size());
    const auto [a, b] = merges_[best_rank];
    for (size_t i = 0; i < sym.size();) {
      if (i + 1 < sym.size() && sym[i] == a && sym[i + 1] == b) {
        next.push_back(merged);
        i += 2;
      } else {
        next.push_back(sym[i++]);
      }
    }
    sym.swap(next);
  }
  return sym;
}

void BbpeVocab::rebuild_ranks() {
  ranks_.clear();
  for (size_t r = 0; r < merges_.size(); ++r)
    ranks_[pack(merges_[r].first, merges_[r].second)] = static_cast<int>(r);
}

TokenSequence BbpeVocab::encode(const std::string& text) const {
  TokenSequence seq;
  seq.text = text;
  seq.ids.push_back(Specials::kBos);
  for (const auto& chunk : split_chunks(text)) {
    auto sym = encode_chunk(chunk);
    seq.ids.insert(seq.ids.end(), sym.begin(), sym.end());
  }
  seq.ids.push_back(Specials::kEos);
  return seq;
}

std::string BbpeVocab::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (Specials::is_special(id)) continue;
    if (id < 0 || id >= size())
      throw Error("decode: unknown token id " + std::to_string(id) + " (vocab size " +
                  std::to_string(size()) + ")");
    out += token_bytes_[id];
  }
  return out;
}

const std::string& BbpeVocab::token_bytes(int id) const {
  if (id < Specials::kByteBase || id >= size())
    throw Error("token_bytes: id " + std::to_string(id) + " has no byte form");
  return token_bytes_[id];
}

void BbpeVocab::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot create vocab file: " + path);
  nlohmann::json header;
  header["version"] = 1;
  header["vocab_size"] = size();
  header["specials"] = {{"<s>", Specials::kBos},
                        {"</s>", Specials::kEos},
                        {"<mask>", Specials::kMask},
                        {"<pad>", Specials::kPad}};
  f << header.dump() << "\n";
  for (const auto& [a, b] : merges_)
    f << escape_bytes(token_bytes_[a]) << " " << escape_bytes(token_bytes_[b]) << "\n";
  if (!f) throw IoError("failed writing vocab file: " + path);
}

BbpeVocab BbpeVocab::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open vocab file: " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty vocab file: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw IoError("bad vocab header in " + path + ": " + e.what());
  }
  if (header.value("version", 0) != 1)
    throw IoError("unsupported vocab version in " + path);

  BbpeVocab v = byte_only();
  std::unordered_map<std::string, int> by_bytes;
  for (int b = 0; b < 256; ++b)
    by_bytes[std::string(1, static_cast<char>(b))] = Specials::kByteBase + b;

  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw IoError("malformed merge line in " + path);
    const std::string left = unescape_bytes(line.substr(0, sp), path);
    const std::string right = unescape_bytes(line.substr(sp + 1), path);
    auto ita = by_bytes.find(left);
    auto itb = by_bytes.find(right);
    if (ita == by_bytes.end() || itb == by_bytes.end())
      throw IoError("merge references unknown token in " + path + ": '" + line + "'");
    const int id = static_cast<int>(v.token_bytes_.size());
    v.token_bytes_.push_back(left + right);
    v.merges_.emplace_back(ita->second, itb->second);
    by_bytes[left + right] = id;
  }
  const int expect = header.value("vocab_size", -1);
  if (expect >= 0 && expect != v.size())
    throw IoError("vocab size mismatch in " + path + ": header says " +
                  std::to_string(expect) + ", file has " + std::to_string(v.size()));
  v.rebuild_ranks();
  return v;
}

}  // namespace ctal
