// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/model/config.h"

#include <set>

#include "pse/error.h"

namespace pse {

namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("model config: " + what);
}

void RejectUnknown(const nlohmann::json& j, const std::set<std::string>& known,
                   const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void ReadIfPresent(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void ModelConfig::Validate() const {
  Require(sample_rate > 0, "sample_rate must be positive");
  Require(num_encoder_blocks >= 1, "num_encoder_blocks must be >= 1");
  Require(num_encoder_blocks == num_decoder_blocks,
          "encoder and decoder block counts must match");
  Require(base_channels >= 1, "base_channels must be >= 1");
  Require(isa_channel_factor > 0 && isa_channel_factor <= 1,
          "isa_channel_factor must lie in (0, 1]");
  Require(lca_channel_factor >= 1, "lca_channel_factor must be >= 1");
  Require(tcn_layers >= 1, "tcn_layers must be >= 1");
  Require(tcn_blocks_per_layer >= 1 && tcn_blocks_per_layer <= 30,
          "tcn_blocks_per_layer must lie in [1, 30]");
  Require(ifi_iterations >= 1, "ifi_iterations must be >= 1");
  Require(drc_exponent > 0 && drc_exponent <= 1,
          "drc_exponent must lie in (0, 1]");
  try {
    stft.Validate(sample_rate);
  } catch (const InvalidParams& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

ModelConfig ToyModelConfig() {
  ModelConfig c;
  c.num_encoder_blocks = 3;
  c.num_decoder_blocks = 3;
  c.base_channels = 8;
  c.tcn_layers = 1;
  c.tcn_blocks_per_layer = 4;
  return c;
}

void to_json(nlohmann::json& j, const StftParams& p) {
  j = {{"window_ms", p.window_ms},
       {"hop_ms", p.hop_ms},
       {"fft_size", p.fft_size},
       {"window", WindowKindName(p.window)}};
}

void from_json(const nlohmann::json& j, StftParams& p) {
  RejectUnknown(j, {"window_ms", "hop_ms", "fft_size", "window"}, "stft");
  ReadIfPresent(j, "window_ms", p.window_ms);
  ReadIfPresent(j, "hop_ms", p.hop_ms);
  ReadIfPresent(j, "fft_size", p.fft_size);
  if (j.contains("window")) {
    try {
      p.window = ParseWindowKind(j.at("window").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("stft.window: ") + e.what());
    }
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"sample_rate_hz", c.sample_rate},
       {"num_encoder_blocks", c.num_encoder_blocks},
       {"num_decoder_blocks", c.num_decoder_blocks},
       {"base_channels", c.base_channels},
       {"isa_channel_factor", c.isa_channel_factor},
       {"lca_channel_factor", c.lca_channel_factor},
       {"tcn_layers", c.tcn_layers},
       {"tcn_blocks_per_layer", c.tcn_blocks_per_layer},
       {"ifi_iterations", c.ifi_iterations},
       {"stft", c.stft},
       {"drc_exponent", c.drc_exponent}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  RejectUnknown(j,
                {"sample_rate_hz", "num_encoder_blocks", "num_decoder_blocks",
                 "base_channels", "isa_channel_factor", "lca_channel_factor",
                 "tcn_layers", "tcn_blocks_per_layer", "ifi_iterations",
                 "stft", "drc_exponent"},
                "model");
  ReadIfPresent(j, "sample_rate_hz", c.sample_rate);
  ReadIfPresent(j, "num_encoder_blocks", c.num_encoder_blocks);
  ReadIfPresent(j, "num_decoder_blocks", c.num_decoder_blocks);
  ReadIfPresent(j, "base_channels", c.base_channels);
  ReadIfPresent(j, "isa_channel_factor", c.isa_channel_factor);
  ReadIfPresent(j, "lca_channel_factor", c.lca_channel_factor);
  ReadIfPresent(j, "tcn_layers", c.tcn_layers);
  ReadIfPresent(j, "tcn_blocks_per_layer", c.tcn_blocks_per_layer);
  ReadIfPresent(j, "ifi_iterations", c.ifi_iterations);
  if (j.contains("stft")) from_json(j.at("stft"), c.stft);
  ReadIfPresent(j, "drc_exponent", c.drc_exponent);
}

}  // namespace pse
