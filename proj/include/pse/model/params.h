// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "pse/model/config.h"
#include "pse/nn/var.h"

namespace pse {

// Named trainable arrays in declaration order, with the configuration and
// seed they were created from.
class ParameterStore {
 public:
  ParameterStore() = default;

  // Errors: InvalidInput on a duplicate name.
  void Add(const std::string& name, nn::Tensor value);
  bool Has(const std::string& name) const;
  // Errors: InvalidInput on an unknown name.
  const nn::Var& Get(const std::string& name) const;
  nn::Tensor& MutableValue(const std::string& name);

  const std::vector<std::string>& names() const { return names_; }
  size_t size() const { return names_.size(); }

  // Deep copy: the clone shares no tensors with this store.
  ParameterStore Clone() const;
  void ZeroGrad();
  // Throws NumericalError naming the first non-finite parameter.
  void CheckFinite() const;

  ModelConfig config;
  uint64_t seed = 0;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, nn::Var> vars_;
};

int64_t CountParameters(const ParameterStore& params);

// Binary archive of named double arrays preceded by a JSON header:
//   "PSEARCH1" | u64 header_len | header | u32 count |
//   { u32 name_len | name | u8 dtype('d') | u32 rank | i64 dims[rank] |
//     f64 data[] }* | u64 FNV-1a checksum of everything before it.
// All integers little-endian.
struct Archive {
  nlohmann::json header;
  std::vector<std::pair<std::string, nn::Tensor>> arrays;
};

void WriteArchive(const std::string& path, const Archive& archive);
// Errors: IOError when unreadable, CheckpointError when malformed.
Archive ReadArchive(const std::string& path);

// The header records the full ModelConfig and the creation seed.
void SaveParameters(const std::string& path, const ParameterStore& params);
// Validates every name and shape against a freshly declared model.
// Errors: CheckpointError on any mismatch or corruption.
ParameterStore LoadParameters(const std::string& path);

}  // namespace pse
