#pragma once

#include <string>
#include <vector>

#include "ctal/graph.hpp"
#include "ctal/tensor_table.hpp"

namespace ctal {

// Payloads are always f32 on disk regardless of the in-memory scalar type.
template <typename S>
TensorTable params_to_table(const ParamStore<S>& params,
                            std::vector<std::pair<std::string, std::string>> config) {
  TensorTable table;
  table.config = std::move(config);
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    NamedTensor t;
    t.name = p.name;
    for (Index d : p.value.shape()) t.dims.push_back(static_cast<uint32_t>(d));
    t.data.resize(static_cast<size_t>(p.value.numel()));
    for (Index j = 0; j < p.value.numel(); ++j) t.data[j] = static_cast<float>(p.value[j]);
    table.tensors.push_back(std::move(t));
  }
  return table;
}

struct LoadReport {
  std::vector<std::string> loaded;
  std::vector<std::string> missing_in_file;   // present in store, absent in file
  std::vector<std::string> missing_in_store;  // present in file, absent in store
};

// Copies matching tensors by name; shape mismatches always throw. Names in
// either direction that fall outside `allow_unmatched_prefixes` are errors.
template <typename S>
LoadReport load_params_from_table(ParamStore<S>& params, const TensorTable& table,
                                  const std::vector<std::string>& allow_unmatched_prefixes = {}) {
  auto allowed = [&](const std::string& name) {
    for (const auto& prefix : allow_unmatched_prefixes)
      if (name.rfind(prefix, 0) == 0) return true;
    return false;
  };

  LoadReport report;
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const NamedTensor* t = table.find(p.name);
    if (!t) {
      if (!allowed(p.name))
        throw IoError("checkpoint is missing parameter '" + p.name + "'");
      report.missing_in_file.push_back(p.name);
      continue;
    }
    std::vector<Index> dims(t->dims.begin(), t->dims.end());
    if (dims != p.value.shape())
      throw IoError("checkpoint shape mismatch for '" + p.name + "': file " +
                    shape_str(dims) + " vs model " + shape_str(p.value.shape()));
    for (Index j = 0; j < p.value.numel(); ++j) p.value[j] = static_cast<S>(t->data[j]);
    report.loaded.push_back(p.name);
  }
  for (const auto& t : table.tensors) {
    if (params.find(t.name)) continue;
    if (!allowed(t.name))
      throw IoError("checkpoint tensor '" + t.name + "' has no matching parameter");
    report.missing_in_store.push_back(t.name);
  }
  return report;
}

template <typename S>
void save_checkpoint(const std::string& path, const ParamStore<S>& params,
                     std::vector<std::pair<std::string, std::string>> config) {
  write_tensor_table(path, params_to_table(params, std::move(config)));
}

}  // namespace ctal
