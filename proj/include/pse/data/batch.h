// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Mixed PSE/SE mini-batch composition with speaker-role disjointness.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pse/data/simulate.h"
#include "pse/rng.h"

namespace pse::data {

struct MiniBatchSpec {
  int pse_items = 2;    // M
  int se_items = 2;     // N
  int dsef_items = 4;   // K
  uint64_t seed = 0;
};

// Attaches the real clue of a PSE item.
using ClueSampler =
    std::function<EnrollmentClue(const TrainingExample& ex, Rng& rng)>;

struct CompositionOptions {
  // Without a sampler, PSE pool items must already carry a real clue.
  ClueSampler sample_clue;
  PlaceholderMode placeholder = PlaceholderMode::kZeros;
  size_t placeholder_length = 24000;
  int max_attempts = 64;
};

// Exactly M PSE items (real clues) and N SE items (one placeholder clue
// each), no speaker acting as a PSE interferer while being any item's
// target, shuffled by spec.seed. Items are drawn without replacement.
// Errors: CompositionError when no disjoint batch is found within
// max_attempts reshuffles; InvalidParams on empty required pools.
std::vector<TrainingExample> ComposeUnifiedBatch(
    const std::vector<TrainingExample>& pse_pool,
    const std::vector<TrainingExample>& se_pool, const MiniBatchSpec& spec,
    const CompositionOptions& options = {});

}  // namespace pse::data
