#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctal {

// Reserved special token ids. Byte tokens follow at kByteBase..kByteBase+255,
// merged tokens after that.
struct Specials {
  static constexpr int kBos = 0;   // <s>
  static constexpr int kEos = 1;   // </s>
  static constexpr int kMask = 2;  // <mask>
  static constexpr int kPad = 3;   // <pad>
  static constexpr int kCount = 4;
  static constexpr int kByteBase = 4;
  static constexpr int kBaseVocab = kByteBase + 256;

  static bool is_special(int id) { return id >= 0 && id < kCount; }
  static const char* name(int id);
};

struct TokenSequence {
  std::vector<int> ids;  // <s> ... </s>
  std::string text;      // provenance

  // Attention length including the wrapping specials.
  int length() const { return static_cast<int>(ids.size()); }
};

// Byte-level BPE vocabulary: 256 byte symbols plus specials, extended by
// greedy most-frequent-pair merges. Every byte sequence stays encodable.
class BbpeVocab {
public:
  static BbpeVocab byte_only();  // no merges
  static BbpeVocab train(const std::vector<std::string>& corpus, int vocab_size);

  TokenSequence encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;

  int size() const { return static_cast<int>(token_bytes_.size()); }
  int num_merges() const { return static_cast<int>(merges_.size()); }
  const std::pair<int, int>& merge(int i) const { return merges_[i]; }

  // Raw byte string of a token (throws on specials/out of range).
  const std::string& token_bytes(int id) const;

  void save(const std::string& path) const;
  static BbpeVocab load(const std::string& path);

  // Whitespace-aware chunking; merges never cross chunk boundaries and
  // concatenating chunks restores the input bytes exactly.
  static std::vector<std::string> split_chunks(const std::string& text);

private:
  std::vector<std::pair<int, int>> merges_;  // priority order
  std::vector<std::string> token_bytes_;     // id -> bytes ("" for specials)
  std::unordered_map<uint64_t, int> ranks_;  // packed pair -> merge rank

  std::vector<int> encode_chunk(const std::string& chunk) const;
  void rebuild_ranks();
};

}  // namespace ctal
