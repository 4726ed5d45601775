// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/cli/run_config.h"

#include <fstream>

#include "pse/error.h"

namespace pse::cli {

using nlohmann::json;

namespace {

void CollectKeys(const json& j, const std::string& prefix, std::set<std::string>& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object())
      CollectKeys(value, name, out);
    else
      out.insert(name);
  }
}

}  // namespace

void RunConfig::Validate() const {
  model.Validate();
  train.Validate();
}

json RunConfig::ToJson() const {
  return {{"model", model},
          {"train", train},
          {"data", {{"corpus", data.corpus}, {"train", data.train}, {"dev", data.dev}}}};
}

RunConfig ParseRunConfig(const json& j) {
  if (!j.is_object()) throw ConfigError("run config: expected an object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "model") {
      c.model = value.get<ModelConfig>();
    } else if (key == "train") {
      c.train = value.get<train::TrainConfig>();
    } else if (key == "data") {
      if (!value.is_object()) throw ConfigError("data: expected an object");
      for (const auto& [k, v] : value.items()) {
        try {
          if (k == "corpus")
            c.data.corpus = v.get<std::string>();
          else if (k == "train")
            c.data.train = v.get<std::vector<std::string>>();
          else if (k == "dev")
            c.data.dev = v.get<std::vector<std::string>>();
          else
            throw ConfigError("data: unknown key '" + k + "'");
        } catch (const json::exception& e) {
          throw ConfigError("data." + k + ": " + e.what());
        }
      }
    } else {
      throw ConfigError("run config: unknown section '" + key + "'");
    }
  }
  CollectKeys(j, "", c.user_set);
  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return ParseRunConfig(j);
}

}  // namespace pse::cli
