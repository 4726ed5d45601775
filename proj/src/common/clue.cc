// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/clue.h"

#include <algorithm>
#include <cmath>

#include "pse/error.h"
#include "pse/rng.h"

namespace pse {

std::string PlaceholderModeName(PlaceholderMode mode) {
  switch (mode) {
    case PlaceholderMode::kZeros: return "zeros";
    case PlaceholderMode::kOnes: return "ones";
    case PlaceholderMode::kRandom: return "random";
  }
  return "zeros";
}

PlaceholderMode ParsePlaceholderMode(const std::string& name) {
  if (name == "zeros") return PlaceholderMode::kZeros;
  if (name == "ones") return PlaceholderMode::kOnes;
  if (name == "random") return PlaceholderMode::kRandom;
  throw InvalidInput("unknown placeholder mode '" + name + "'");
}

std::string EnrollmentClue::source_utt_id() const {
  std::string out;
  for (const auto& id : source_utt_ids) {
    if (!out.empty()) out += '+';
    out += id;
  }
  return out;
}

bool EnrollmentClue::ComesFrom(const std::string& utt_id) const {
  return std::find(source_utt_ids.begin(), source_utt_ids.end(), utt_id) !=
         source_utt_ids.end();
}

EnrollmentClue EnrollmentClue::Real(Waveform wave,
                                    std::vector<std::string> sources) {
  EnrollmentClue c;
  c.kind = Kind::kReal;
  c.length = wave.size();
  c.wave = std::move(wave);
  c.source_utt_ids = std::move(sources);
  return c;
}

EnrollmentClue MakePlaceholder(PlaceholderMode mode, size_t length,
                               uint64_t seed, int sample_rate) {
  if (length == 0) throw InvalidInput("placeholder length must be positive");
  EnrollmentClue c;
  c.kind = EnrollmentClue::Kind::kPlaceholder;
  c.mode = mode;
  c.length = length;
  c.seed = seed;
  c.wave.sample_rate = sample_rate;
  switch (mode) {
    case PlaceholderMode::kZeros:
      c.wave.samples.assign(length, 0.0);
      break;
    case PlaceholderMode::kOnes:
      c.wave.samples.assign(length, 1.0);
      break;
    case PlaceholderMode::kRandom: {
      Rng rng = MakeRng(seed, kStreamPlaceholder);
      c.wave.samples.resize(length);
      for (double& v : c.wave.samples) v = StandardNormal(rng);
      const double rms = std::sqrt(MeanPower(c.wave.samples));
      if (rms > 0.0)
        for (double& v : c.wave.samples) v *= 0.1 / rms;
      break;
    }
  }
  return c;
}

}  // namespace pse
