// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Mixture simulation in "minimum" mode: sources are truncated to the
// shorter one, the first utterance is always the target.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pse/clue.h"
#include "pse/data/corpus.h"

namespace pse::data {

enum class Condition { kOneSpeakerNoise, kTwoSpeaker, kTwoSpeakerNoise };
std::string ConditionName(Condition c);  // 1spk_noise, 2spk, 2spk_noise
Condition ParseCondition(const std::string& name);

enum class Task { kPse, kSe };
std::string TaskName(Task t);  // PSE, SE

struct TrainingExample {
  std::string id;
  Task task = Task::kPse;
  Condition condition = Condition::kTwoSpeaker;
  Waveform mixture;
  Waveform target;
  std::vector<EnrollmentClue> clues;
  std::string target_speaker;
  std::string target_utt;
  std::string interferer_speaker;  // empty without an interferer
  std::string interferer_utt;

  // Stored components: mixture == (target + interferer) + noise, exactly.
  Waveform interferer;  // scaled; empty without an interferer
  Waveform noise;       // scaled; empty without noise
  double sir_db = std::numeric_limits<double>::quiet_NaN();
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  double interferer_gain = 0.0;
  double noise_gain = 0.0;

  bool has_interferer() const { return !interferer_speaker.empty(); }
};

// Noise to add at snr_db relative to the signal it is mixed into. Longer
// noise is cropped at an offset drawn from crop_seed; shorter noise is
// looped.
struct NoiseSpec {
  Waveform noise;
  double snr_db = 0.0;
  uint64_t crop_seed = 0;
};

// Interferer gain sqrt(p_t / (p_i 10^(sir/10))) sets the target-to-
// interferer power ratio; noise gain is computed against target +
// interferer. Errors: RoleConflict when both utterances share a speaker,
// InvalidInput on a zero-power source or noise, ShapeError on a rate
// mismatch.
TrainingExample SimulateTwoSpeaker(const Utterance& target,
                                   const Utterance& interferer, double sir_db,
                                   const std::optional<NoiseSpec>& noise = {});

TrainingExample SimulateNoisy(const Utterance& target, const NoiseSpec& noise);

// Power ratios recomputed from stored components.
double MeasuredSirDb(const TrainingExample& ex);
double MeasuredSnrDb(const TrainingExample& ex);

// Random crop of all aligned signals to `length` samples (unchanged when
// already shorter or equal).
TrainingExample CropExample(const TrainingExample& ex, size_t length,
                            uint64_t seed);

struct SimulationOptions {
  Condition condition = Condition::kTwoSpeaker;
  int count = 20;
  double sir_min_db = -5.0, sir_max_db = 5.0;
  double snr_min_db = 0.0, snr_max_db = 15.0;
  uint64_t seed = 0;
};

// Draws `count` examples from the listed speakers' utterances. Example i
// depends only on (seed, i). Errors: InvalidParams on fewer than 2
// speakers for two-speaker conditions.
std::vector<TrainingExample> SimulateSet(const CorpusIndex& corpus,
                                         const std::vector<std::string>& speakers,
                                         const SimulationOptions& options);

}  // namespace pse::data
