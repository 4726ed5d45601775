// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/data/batch.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "pse/error.h"
#include "pse/rng.h"

namespace pse::data {

namespace {

std::vector<size_t> Shuffled(size_t n, Rng& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// One greedy pass over shuffled pools; empty result when it gets stuck.
std::vector<const TrainingExample*> TryCompose(
    const std::vector<TrainingExample>& pse_pool,
    const std::vector<TrainingExample>& se_pool, const MiniBatchSpec& spec,
    Rng& rng) {
  std::set<std::string> targets, interferers;
  std::vector<const TrainingExample*> chosen;
  for (size_t i : Shuffled(pse_pool.size(), rng)) {
    if (static_cast<int>(chosen.size()) == spec.pse_items) break;
    const TrainingExample& ex = pse_pool[i];
    if (interferers.contains(ex.target_speaker)) continue;
    if (ex.has_interferer() && targets.contains(ex.interferer_speaker)) continue;
    targets.insert(ex.target_speaker);
    if (ex.has_interferer()) interferers.insert(ex.interferer_speaker);
    chosen.push_back(&ex);
  }
  if (static_cast<int>(chosen.size()) < spec.pse_items) return {};
  int se = 0;
  for (size_t i : Shuffled(se_pool.size(), rng)) {
    if (se == spec.se_items) break;
    const TrainingExample& ex = se_pool[i];
    if (interferers.contains(ex.target_speaker)) continue;
    chosen.push_back(&ex);
    ++se;
  }
  if (se < spec.se_items) return {};
  return chosen;
}

}  // namespace

std::vector<TrainingExample> ComposeUnifiedBatch(
    const std::vector<TrainingExample>& pse_pool,
    const std::vector<TrainingExample>& se_pool, const MiniBatchSpec& spec,
    const CompositionOptions& options) {
  if (spec.pse_items < 0 || spec.se_items < 0 ||
      spec.pse_items + spec.se_items == 0)
    throw InvalidParams("unified batch needs M + N > 0");
  if (spec.pse_items > 0 && pse_pool.empty())
    throw InvalidParams("PSE pool is empty");
  if (spec.se_items > 0 && se_pool.empty())
    throw InvalidParams("SE pool is empty");

  Rng rng = MakeRng(spec.seed, kStreamBatch);
  std::vector<const TrainingExample*> chosen;
  for (int attempt = 0; attempt < options.max_attempts && chosen.empty(); ++attempt)
    chosen = TryCompose(pse_pool, se_pool, spec, rng);
  if (chosen.empty())
    throw CompositionError("no role-disjoint batch of " +
                           std::to_string(spec.pse_items) + " PSE + " +
                           std::to_string(spec.se_items) + " SE items after " +
                           std::to_string(options.max_attempts) + " attempts");

  std::vector<TrainingExample> batch;
  for (size_t k = 0; k < chosen.size(); ++k) {
    TrainingExample ex = *chosen[k];
    if (static_cast<int>(k) < spec.pse_items) {
      ex.task = Task::kPse;
      if (options.sample_clue) {
        ex.clues = {options.sample_clue(ex, rng)};
      } else if (ex.clues.empty() || !ex.clues.front().is_real()) {
        throw InvalidParams("PSE item '" + ex.id + "' carries no real clue");
      }
    } else {
      ex.task = Task::kSe;
      ex.clues = {MakePlaceholder(options.placeholder,
                                  options.placeholder_length,
                                  DeriveSeed(spec.seed, kStreamPlaceholder, k),
                                  ex.mixture.sample_rate)};
    }
    batch.push_back(std::move(ex));
  }
  std::shuffle(batch.begin(), batch.end(), rng);
  return batch;
}

}  // namespace pse::data
