#include "ctal/tensor_table.hpp"

#include <cstring>
#include <fstream>

#include "ctal/errors.hpp"

namespace ctal {

namespace {
constexpr char kMagic[8] = {'C', 'T', 'A', 'L', 'C', 'K', 'P', 'T'};
constexpr uint16_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f, const std::string& path) {
  T v{};
  if (!f.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw IoError("truncated tensor table: " + path);
  return v;
}
}  // namespace

const NamedTensor* TensorTable::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

std::string TensorTable::config_value(const std::string& key,
                                      const std::string& fallback) const {
  for (const auto& [k, v] : config)
    if (k == key) return v;
  return fallback;
}

void write_tensor_table(const std::string& path, const TensorTable& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot create tensor table: " + path);
  f.write(kMagic, 8);
  put<uint16_t>(f, kVersion);

  std::string cfg;
  for (const auto& [k, v] : table.config) cfg += k + "=" + v + "\n";
  put<uint32_t>(f, static_cast<uint32_t>(cfg.size()));
  f.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  put<uint32_t>(f, static_cast<uint32_t>(table.tensors.size()));
  for (const auto& t : table.tensors) {
    if (t.name.size() > 0xffff) throw IoError("tensor name too long: " + t.name);
    if (t.numel() != t.data.size())
      throw IoError("tensor '" + t.name + "' dims do not match payload length");
    put<uint16_t>(f, static_cast<uint16_t>(t.name.size()));
    f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<uint16_t>(f, static_cast<uint16_t>(t.dims.size()));
    for (uint32_t d : t.dims) put<uint32_t>(f, d);
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!f) throw IoError("failed writing tensor table: " + path);
}

TensorTable read_tensor_table(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open tensor table: " + path);
  char magic[8];
  if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("bad tensor table magic in " + path);
  const auto version = get<uint16_t>(f, path);
  if (version != kVersion)
    throw IoError("unsupported tensor table version " + std::to_string(version) + " in " +
                  path);

  TensorTable table;
  const auto cfg_len = get<uint32_t>(f, path);
  std::string cfg(cfg_len, '\0');
  if (cfg_len && !f.read(cfg.data(), cfg_len))
    throw IoError("truncated config block: " + path);
  size_t start = 0;
  while (start < cfg.size()) {
    auto nl = cfg.find('\n', start);
    if (nl == std::string::npos) nl = cfg.size();
    const std::string line = cfg.substr(start, nl - start);
    start = nl + 1;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed config line in " + path);
    table.config.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }

  const auto count = get<uint32_t>(f, path);
  table.tensors.resize(count);
  for (uint32_t i = 0; i < count; ++i) {
    auto& t = table.tensors[i];
    const auto name_len = get<uint16_t>(f, path);
    t.name.resize(name_len);
    if (!f.read(t.name.data(), name_len)) throw IoError("truncated tensor name: " + path);
    const auto rank = get<uint16_t>(f, path);
    t.dims.resize(rank);
    for (uint16_t r = 0; r < rank; ++r) t.dims[r] = get<uint32_t>(f, path);
    t.data.resize(t.numel());
    if (!f.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float))))
      throw IoError("truncated payload for tensor '" + t.name + "' in " + path);
  }
  return table;
}

}  // namespace ctal
