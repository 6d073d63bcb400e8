#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ctal {

struct NamedTensor {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;  // row-major

  size_t numel() const {
    size_t n = 1;
    for (auto d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }
};

// On-disk container shared by checkpoints and embedding dumps:
// magic "CTALCKPT", version u16, config block (u32 length + "key=value\n"
// lines), u32 tensor count, then per tensor: u16 name length, name bytes,
// u16 rank, u32 dims, little-endian f32 payload.
struct TensorTable {
  std::vector<std::pair<std::string, std::string>> config;  // preserved order
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  std::string config_value(const std::string& key, const std::string& fallback = "") const;
};

void write_tensor_table(const std::string& path, const TensorTable& table);
TensorTable read_tensor_table(const std::string& path);

}  // namespace ctal
