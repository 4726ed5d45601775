// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pse/dsp/waveform.h"

namespace pse {

enum class PlaceholderMode { kZeros, kOnes, kRandom };

std::string PlaceholderModeName(PlaceholderMode mode);
PlaceholderMode ParsePlaceholderMode(const std::string& name);

// Enrollment speech for the target speaker, or a stand-in signal when none
// is available.
struct EnrollmentClue {
  enum class Kind { kReal, kPlaceholder };

  Kind kind = Kind::kPlaceholder;
  Waveform wave;  // real clues, and materialized placeholders
  PlaceholderMode mode = PlaceholderMode::kZeros;
  size_t length = 0;  // placeholder length in samples
  uint64_t seed = 0;  // placeholder kRandom
  // Utterances the real clue was cut from, in order.
  std::vector<std::string> source_utt_ids;

  bool is_real() const { return kind == Kind::kReal; }
  // "a+b" for a clue concatenated from utterances a and b.
  std::string source_utt_id() const;
  const Waveform& waveform() const { return wave; }
  bool ComesFrom(const std::string& utt_id) const;

  static EnrollmentClue Real(Waveform wave, std::vector<std::string> sources);
};

// zeros -> all 0; ones -> all 1; random -> standard normal scaled to
// RMS 0.1, reproducible from seed. Errors: InvalidInput on length 0.
EnrollmentClue MakePlaceholder(PlaceholderMode mode, size_t length,
                               uint64_t seed, int sample_rate = 8000);

}  // namespace pse
