// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Utterance corpora: the synthetic speaker generator, pink noise, speaker
// indexing and partitioning.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pse/dsp/waveform.h"

namespace pse::data {

struct Utterance {
  std::string utt_id;
  std::string speaker_id;
  Waveform wave;
};

// Source-filter parameters of one pseudo-speaker.
struct SpeakerVoice {
  std::string speaker_id;
  double pitch_hz = 0.0;
  std::array<double, 3> formant_hz{};
  std::array<double, 3> bandwidth_hz{};
  double breathiness = 0.0;  // noise share of the excitation
};

struct CorpusOptions {
  int num_speakers = 10;
  int utts_per_speaker = 6;
  double min_duration_s = 2.0;
  double max_duration_s = 4.0;
  int sample_rate = 8000;
  uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<SpeakerVoice> voices;
  std::vector<Utterance> utterances;
};

// Each speaker is a fixed 3-formant resonator bank with a fixed pitch in
// [80, 300] Hz; each utterance drives it with a pulse train plus noise
// under a random syllabic envelope. Deterministic given the options.
// Errors: InvalidParams on fewer than 2 speakers, no utterances, or
// durations below 0.5 s.
SyntheticCorpus GenSyntheticCorpus(const CorpusOptions& options);

// Pink (1/f) noise at RMS 0.1, reproducible from seed.
Waveform PinkNoise(size_t num_samples, uint64_t seed, int sample_rate = 8000);

// Utterance lookup by id and by speaker. Holds a reference to the corpus.
class CorpusIndex {
 public:
  explicit CorpusIndex(const std::vector<Utterance>& utterances);

  const std::vector<Utterance>& utterances() const { return utts_; }
  const Utterance& Get(const std::string& utt_id) const;
  // Indices into utterances(), in corpus order.
  const std::vector<size_t>& OfSpeaker(const std::string& speaker) const;
  std::vector<std::string> Speakers() const;
  int sample_rate() const;

 private:
  const std::vector<Utterance>& utts_;
  std::map<std::string, size_t> by_id_;
  std::map<std::string, std::vector<size_t>> by_speaker_;
};

// Splits speakers into two disjoint sets; the first receives
// round(fraction * num_speakers) of them, chosen by seed.
std::pair<std::vector<std::string>, std::vector<std::string>> PartitionSpeakers(
    const std::vector<Utterance>& utterances, double fraction, uint64_t seed);

}  // namespace pse::data
