// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "pse/clue.h"
#include "pse/data/batch.h"
#include "pse/data/enrollment.h"
#include "pse/losses.h"

namespace pse::train {

// sef: single real clue per item. usef: M PSE + N SE items per batch.
// dsef: two clues per item with the HEIT term. lsep: dsef with
// (2 s, 10-40 s) clue pairs.
enum class Regime { kSef, kUsef, kDsef, kLsep };
std::string RegimeName(Regime r);
Regime ParseRegime(const std::string& name);

struct TrainConfig {
  Regime regime = Regime::kSef;
  double base_lr = 5e-4;
  int total_epochs = 120;
  double decay_factor_phase1 = 0.98;
  double decay_factor_phase2 = 0.9;
  int phase1_epochs = 100;
  int decay_every = 2;  // epochs per decay step, both phases
  double grad_clip_norm = 1.0;
  double lambda_heit = 1.0;
  losses::HeitNorm heit_norm = losses::HeitNorm::kRealImag;
  // M and N for usef; K for dsef/lsep; sef uses M + N real-clue items.
  data::MiniBatchSpec batch;
  data::Pairing pairing = data::Pairing::kRandomRandom;
  data::EnrollPolicy enroll_policy = data::EnrollPolicy::kRandom;
  PlaceholderMode placeholder = PlaceholderMode::kZeros;
  double segment_s = 3.0;  // random training crop; also placeholder length
  int steps_per_epoch = 0;  // 0: one pass over the PSE pool
  // Diagnostic: use the first clue twice so the HEIT term is exactly 0.
  bool tie_clues = false;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;

  // Items per optimizer step for this regime.
  int BatchSize() const;
  // Throws ConfigError on any violated invariant.
  void Validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace pse::train
