// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/train/config.h"

#include <set>

#include "pse/error.h"

namespace pse::train {

std::string RegimeName(Regime r) {
  switch (r) {
    case Regime::kSef: return "sef";
    case Regime::kUsef: return "usef";
    case Regime::kDsef: return "dsef";
    case Regime::kLsep: return "lsep";
  }
  return "sef";
}

Regime ParseRegime(const std::string& name) {
  if (name == "sef") return Regime::kSef;
  if (name == "usef") return Regime::kUsef;
  if (name == "dsef") return Regime::kDsef;
  if (name == "lsep") return Regime::kLsep;
  throw ConfigError("unknown regime '" + name + "'");
}

int TrainConfig::BatchSize() const {
  switch (regime) {
    case Regime::kSef:
    case Regime::kUsef: return batch.pse_items + batch.se_items;
    case Regime::kDsef:
    case Regime::kLsep: return batch.dsef_items;
  }
  return 0;
}

void TrainConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("train config: " + what);
  };
  require(base_lr > 0, "base_lr must be positive");
  require(total_epochs >= 1, "total_epochs must be >= 1");
  require(phase1_epochs >= 0 && total_epochs >= phase1_epochs,
          "need 0 <= phase1_epochs <= total_epochs");
  require(decay_every >= 1, "decay_every must be >= 1");
  require(decay_factor_phase1 > 0 && decay_factor_phase1 <= 1 &&
              decay_factor_phase2 > 0 && decay_factor_phase2 <= 1,
          "decay factors must lie in (0, 1]");
  require(grad_clip_norm > 0, "grad_clip_norm must be positive");
  require(lambda_heit >= 0, "lambda_heit must be >= 0");
  require(batch.pse_items >= 0 && batch.se_items >= 0 && batch.dsef_items >= 0,
          "batch counts must be >= 0");
  if (regime == Regime::kUsef)
    require(batch.pse_items + batch.se_items > 0, "usef needs M + N > 0");
  if (regime == Regime::kSef)
    require(batch.pse_items + batch.se_items > 0, "sef needs M + N > 0 items");
  if (regime == Regime::kDsef || regime == Regime::kLsep)
    require(batch.dsef_items > 0, "dsef/lsep need K > 0");
  require(segment_s > 0, "segment_s must be positive");
  require(steps_per_epoch >= 0, "steps_per_epoch must be >= 0");
  require(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 &&
              adam_beta2 < 1 && adam_eps > 0,
          "bad Adam hyperparameters");
}

namespace {

template <typename T>
void Read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train.") + key + ": " + e.what());
  }
}

template <typename Parse, typename T>
void ReadEnum(const nlohmann::json& j, const char* key, Parse parse, T& out) {
  if (!j.contains(key)) return;
  try {
    out = parse(j.at(key).get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("train.") + key + ": " + e.what());
  }
}

}  // namespace

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"regime", RegimeName(c.regime)},
       {"base_lr", c.base_lr},
       {"total_epochs", c.total_epochs},
       {"decay_factor_phase1", c.decay_factor_phase1},
       {"decay_factor_phase2", c.decay_factor_phase2},
       {"phase1_epochs", c.phase1_epochs},
       {"decay_every_epochs", c.decay_every},
       {"grad_clip_norm", c.grad_clip_norm},
       {"lambda_heit", c.lambda_heit},
       {"heit_norm", losses::HeitNormName(c.heit_norm)},
       {"batch_pse_items", c.batch.pse_items},
       {"batch_se_items", c.batch.se_items},
       {"batch_dsef_items", c.batch.dsef_items},
       {"pairing", data::PairingName(c.pairing)},
       {"enroll_policy", data::EnrollPolicyName(c.enroll_policy)},
       {"placeholder", PlaceholderModeName(c.placeholder)},
       {"segment_s", c.segment_s},
       {"steps_per_epoch", c.steps_per_epoch},
       {"tie_clues", c.tie_clues},
       {"adam_beta1", c.adam_beta1},
       {"adam_beta2", c.adam_beta2},
       {"adam_eps", c.adam_eps},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  static const std::set<std::string> known = {
      "regime", "base_lr", "total_epochs", "decay_factor_phase1",
      "decay_factor_phase2", "phase1_epochs", "decay_every_epochs",
      "grad_clip_norm", "lambda_heit", "heit_norm", "batch_pse_items",
      "batch_se_items", "batch_dsef_items", "pairing", "enroll_policy",
      "placeholder", "segment_s", "steps_per_epoch", "tie_clues",
      "adam_beta1", "adam_beta2", "adam_eps", "seed"};
  if (!j.is_object()) throw ConfigError("train: expected an object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("train: unknown key '" + key + "'");
  ReadEnum(j, "regime", ParseRegime, c.regime);
  Read(j, "base_lr", c.base_lr);
  Read(j, "total_epochs", c.total_epochs);
  Read(j, "decay_factor_phase1", c.decay_factor_phase1);
  Read(j, "decay_factor_phase2", c.decay_factor_phase2);
  Read(j, "phase1_epochs", c.phase1_epochs);
  Read(j, "decay_every_epochs", c.decay_every);
  Read(j, "grad_clip_norm", c.grad_clip_norm);
  Read(j, "lambda_heit", c.lambda_heit);
  ReadEnum(j, "heit_norm", losses::ParseHeitNorm, c.heit_norm);
  Read(j, "batch_pse_items", c.batch.pse_items);
  Read(j, "batch_se_items", c.batch.se_items);
  Read(j, "batch_dsef_items", c.batch.dsef_items);
  ReadEnum(j, "pairing", data::ParsePairing, c.pairing);
  ReadEnum(j, "enroll_policy", data::ParseEnrollPolicy, c.enroll_policy);
  ReadEnum(j, "placeholder", ParsePlaceholderMode, c.placeholder);
  Read(j, "segment_s", c.segment_s);
  Read(j, "steps_per_epoch", c.steps_per_epoch);
  Read(j, "tie_clues", c.tie_clues);
  Read(j, "adam_beta1", c.adam_beta1);
  Read(j, "adam_beta2", c.adam_beta2);
  Read(j, "adam_eps", c.adam_eps);
  Read(j, "seed", c.seed);
}

}  // namespace pse::train
