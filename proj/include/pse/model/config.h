// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "json.hpp"

#include "pse/dsp/stft.h"

namespace pse {

struct ModelConfig {
  int sample_rate = 8000;
  int num_encoder_blocks = 7;
  int num_decoder_blocks = 7;
  int base_channels = 32;
  // Per-frame ISA attention width = ceil(2 * bins * isa_channel_factor).
  double isa_channel_factor = 1.0 / 32.0;
  // LCA global-branch bottleneck divides channels by this factor.
  double lca_channel_factor = 4.0;
  int tcn_layers = 2;
  int tcn_blocks_per_layer = 10;
  int ifi_iterations = 2;
  StftParams stft;
  double drc_exponent = 0.5;

  // Throws ConfigError on any violated invariant.
  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Encoder/decoder layout for a given block count: one plain dense block,
// then ceil((n-1)/2) dense encoders, then floor((n-1)/2) conv blocks.
enum class EncoderKind { kDense, kDenseEncoder, kConv };

// Desk-scale presets used by tests and examples.
ModelConfig ToyModelConfig();

void to_json(nlohmann::json& j, const ModelConfig& c);
// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const StftParams& p);
void from_json(const nlohmann::json& j, StftParams& p);

}  // namespace pse
