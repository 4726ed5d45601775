// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/data/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "pse/error.h"
#include "pse/rng.h"

namespace pse::data {

namespace {

constexpr double kPi = std::numbers::pi;

std::string Id(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, n);
  return buf;
}

SpeakerVoice DrawVoice(int speaker, uint64_t seed, int rate) {
  Rng rng = MakeRng(seed, kStreamSpeaker, speaker);
  SpeakerVoice v;
  v.speaker_id = Id("spk", speaker);
  v.pitch_hz = UniformReal(rng, 80.0, 300.0);
  const double top = 0.45 * rate;
  v.formant_hz = {UniformReal(rng, 300.0, 900.0),
                  UniformReal(rng, 900.0, std::min(2300.0, top)),
                  UniformReal(rng, std::min(2300.0, top - 400.0), top - 100.0)};
  for (double& b : v.bandwidth_hz) b = UniformReal(rng, 60.0, 160.0);
  v.breathiness = UniformReal(rng, 0.05, 0.3);
  return v;
}

// Cascade of two-pole resonators with unit gain at each centre frequency.
std::vector<double> Formants(const std::vector<double>& x,
                             const SpeakerVoice& v, int rate) {
  std::vector<double> y = x;
  for (int k = 0; k < 3; ++k) {
    const double r = std::exp(-kPi * v.bandwidth_hz[k] / rate);
    const double theta = 2.0 * kPi * v.formant_hz[k] / rate;
    const double a1 = 2.0 * r * std::cos(theta), a2 = -r * r;
    const double gain = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
    double y1 = 0.0, y2 = 0.0;
    for (double& s : y) {
      const double out = gain * s + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = out;
      s = out;
    }
  }
  return y;
}

std::vector<double> Utter(const SpeakerVoice& v, size_t n, Rng& rng,
                          int rate) {
  // Syllables of 120-320 ms with 30% unvoiced, separated by short gaps.
  std::vector<double> envelope(n, 0.0), voicing(n, 1.0);
  size_t pos = static_cast<size_t>(UniformReal(rng, 0.0, 0.08) * rate);
  while (pos < n) {
    const size_t len = static_cast<size_t>(UniformReal(rng, 0.12, 0.32) * rate);
    const double amp = UniformReal(rng, 0.4, 1.0);
    const double voiced = UniformReal(rng, 0.0, 1.0) < 0.3 ? 0.0 : 1.0;
    for (size_t i = 0; i < len && pos + i < n; ++i) {
      envelope[pos + i] = amp * std::pow(std::sin(kPi * (i + 0.5) / len), 2);
      voicing[pos + i] = voiced;
    }
    pos += len + static_cast<size_t>(UniformReal(rng, 0.02, 0.12) * rate);
  }

  // Pitch contour: slow drift of up to +-12% around the speaker pitch.
  const double drift_hz = UniformReal(rng, 0.5, 2.0);
  const double drift_phase = UniformReal(rng, 0.0, 2.0 * kPi);
  std::vector<double> excitation(n);
  double phase = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double f0 = v.pitch_hz *
        (1.0 + 0.12 * std::sin(2.0 * kPi * drift_hz * i / rate + drift_phase));
    phase += f0 / rate;
    double pulse = 0.0;
    if (phase >= 1.0) {
      phase -= 1.0;
      pulse = 1.0;
    }
    const double noise = StandardNormal(rng) * 0.3;
    const double breath = voicing[i] > 0 ? v.breathiness : 1.0;
    excitation[i] = envelope[i] * (voicing[i] * (1.0 - breath) * pulse * 4.0 +
                                   breath * noise);
  }
  std::vector<double> y = Formants(excitation, v, rate);
  const double rms = std::sqrt(MeanPower(y));
  const double level = std::pow(10.0, UniformReal(rng, -28.0, -20.0) / 20.0);
  if (rms > 0.0)
    for (double& s : y) s *= level / rms;
  return y;
}

}  // namespace

SyntheticCorpus GenSyntheticCorpus(const CorpusOptions& o) {
  if (o.num_speakers < 2)
    throw InvalidParams("synthetic corpus needs at least 2 speakers");
  if (o.utts_per_speaker < 1)
    throw InvalidParams("synthetic corpus needs utterances per speaker");
  if (o.min_duration_s < 0.5 || o.max_duration_s < o.min_duration_s)
    throw InvalidParams("utterance durations must satisfy 0.5 <= min <= max");
  if (o.sample_rate < 4000) throw InvalidParams("sample rate below 4 kHz");

  SyntheticCorpus corpus;
  for (int s = 0; s < o.num_speakers; ++s) {
    const SpeakerVoice voice = DrawVoice(s, o.seed, o.sample_rate);
    for (int u = 0; u < o.utts_per_speaker; ++u) {
      Rng rng = MakeRng(o.seed, kStreamUtterance,
                        static_cast<uint64_t>(s) * o.utts_per_speaker + u);
      const double dur = UniformReal(rng, o.min_duration_s, o.max_duration_s);
      const size_t n = static_cast<size_t>(std::llround(dur * o.sample_rate));
      Utterance utt;
      utt.speaker_id = voice.speaker_id;
      utt.utt_id = voice.speaker_id + "_" + Id("u", u);
      utt.wave = Waveform(Utter(voice, n, rng, o.sample_rate), o.sample_rate);
      corpus.utterances.push_back(std::move(utt));
    }
    corpus.voices.push_back(voice);
  }
  return corpus;
}

Waveform PinkNoise(size_t n, uint64_t seed, int sample_rate) {
  // Paul Kellet's refined pink filter over white noise.
  Rng rng = MakeRng(seed, kStreamNoise);
  std::vector<double> y(n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  for (size_t i = 0; i < n; ++i) {
    const double w = StandardNormal(rng);
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    y[i] = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
    b6 = w * 0.115926;
  }
  const double rms = std::sqrt(MeanPower(y));
  if (rms > 0.0)
    for (double& s : y) s *= 0.1 / rms;
  return Waveform(std::move(y), sample_rate);
}

CorpusIndex::CorpusIndex(const std::vector<Utterance>& utterances)
    : utts_(utterances) {
  for (size_t i = 0; i < utts_.size(); ++i) {
    if (!by_id_.emplace(utts_[i].utt_id, i).second)
      throw InvalidInput("duplicate utterance id '" + utts_[i].utt_id + "'");
    by_speaker_[utts_[i].speaker_id].push_back(i);
  }
}

const Utterance& CorpusIndex::Get(const std::string& utt_id) const {
  auto it = by_id_.find(utt_id);
  if (it == by_id_.end()) throw InvalidInput("unknown utterance '" + utt_id + "'");
  return utts_[it->second];
}

const std::vector<size_t>& CorpusIndex::OfSpeaker(
    const std::string& speaker) const {
  static const std::vector<size_t> kNone;
  auto it = by_speaker_.find(speaker);
  return it == by_speaker_.end() ? kNone : it->second;
}

std::vector<std::string> CorpusIndex::Speakers() const {
  std::vector<std::string> out;
  for (const auto& [spk, idx] : by_speaker_) out.push_back(spk);
  return out;
}

int CorpusIndex::sample_rate() const {
  return utts_.empty() ? 8000 : utts_.front().wave.sample_rate;
}

std::pair<std::vector<std::string>, std::vector<std::string>> PartitionSpeakers(
    const std::vector<Utterance>& utterances, double fraction, uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw InvalidParams("partition fraction must lie in [0, 1]");
  std::set<std::string> unique;
  for (const auto& u : utterances) unique.insert(u.speaker_id);
  std::vector<std::string> speakers(unique.begin(), unique.end());
  Rng rng = MakeRng(seed, kStreamSpeaker);
  std::shuffle(speakers.begin(), speakers.end(), rng);
  const auto cut = static_cast<size_t>(std::llround(fraction * speakers.size()));
  std::vector<std::string> first(speakers.begin(), speakers.begin() + cut);
  std::vector<std::string> second(speakers.begin() + cut, speakers.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {first, second};
}

}  // namespace pse::data
