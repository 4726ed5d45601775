// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Run configuration files: {"model": {...}, "train": {...}, "data": {...}}.
// Every section is optional; absent keys keep their defaults.

#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "pse/model/config.h"
#include "pse/train/config.h"

namespace pse::cli {

struct DataPaths {
  std::string corpus;                   // corpus.jsonl
  std::vector<std::string> train;       // example-set manifests
  std::vector<std::string> dev;
};

struct RunConfig {
  ModelConfig model;
  train::TrainConfig train;
  DataPaths data;
  // Dotted keys ("train.base_lr") that came from the file or a flag; the
  // rest are defaults.
  std::set<std::string> user_set;

  void Validate() const;
  nlohmann::json ToJson() const;
};

// Parses and validates. Errors: ConfigError (unknown keys, bad values),
// IOError (unreadable file).
RunConfig ParseRunConfig(const nlohmann::json& j);
RunConfig LoadRunConfig(const std::string& path);

}  // namespace pse::cli
