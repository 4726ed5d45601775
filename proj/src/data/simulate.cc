// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/data/simulate.h"

#include <cmath>

#include "pse/error.h"
#include "pse/rng.h"

namespace pse::data {

std::string ConditionName(Condition c) {
  switch (c) {
    case Condition::kOneSpeakerNoise: return "1spk_noise";
    case Condition::kTwoSpeaker: return "2spk";
    case Condition::kTwoSpeakerNoise: return "2spk_noise";
  }
  return "2spk";
}

Condition ParseCondition(const std::string& name) {
  if (name == "1spk_noise") return Condition::kOneSpeakerNoise;
  if (name == "2spk") return Condition::kTwoSpeaker;
  if (name == "2spk_noise") return Condition::kTwoSpeakerNoise;
  throw InvalidInput("unknown condition '" + name + "'");
}

std::string TaskName(Task t) { return t == Task::kPse ? "PSE" : "SE"; }

namespace {

std::vector<double> Head(const std::vector<double>& x, size_t n) {
  return {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n)};
}

double PowerOrThrow(const std::vector<double>& x, const std::string& what) {
  const double p = MeanPower(x);
  if (!(p > 0.0)) throw InvalidInput(what + " has zero power");
  return p;
}

std::vector<double> FitNoise(const NoiseSpec& spec, size_t n) {
  const auto& src = spec.noise.samples;
  if (src.empty()) throw InvalidInput("noise is empty");
  std::vector<double> out(n);
  size_t offset = 0;
  if (src.size() > n) {
    Rng rng = MakeRng(spec.crop_seed, kStreamCrop);
    offset = static_cast<size_t>(UniformInt(rng, 0, src.size() - n));
  }
  for (size_t i = 0; i < n; ++i) out[i] = src[(offset + i) % src.size()];
  return out;
}

void AddNoise(TrainingExample& ex, const NoiseSpec& spec) {
  if (spec.noise.sample_rate != ex.target.sample_rate)
    throw ShapeError("noise sample rate differs from the speech");
  const size_t n = ex.target.size();
  std::vector<double> noise = FitNoise(spec, n);
  const double p_noise = PowerOrThrow(noise, "noise");
  std::vector<double> speech = ex.target.samples;
  if (ex.has_interferer())
    for (size_t i = 0; i < n; ++i) speech[i] += ex.interferer.samples[i];
  const double p_speech = MeanPower(speech);
  ex.noise_gain = std::sqrt(p_speech / (p_noise * std::pow(10.0, spec.snr_db / 10.0)));
  for (double& v : noise) v *= ex.noise_gain;
  ex.snr_db = spec.snr_db;
  ex.noise = Waveform(std::move(noise), ex.target.sample_rate);
}

void Assemble(TrainingExample& ex) {
  const size_t n = ex.target.size();
  ex.mixture = Waveform(ex.target.samples, ex.target.sample_rate);
  for (size_t i = 0; i < n; ++i) {
    double v = ex.target.samples[i];
    if (!ex.interferer.empty()) v += ex.interferer.samples[i];
    if (!ex.noise.empty()) v += ex.noise.samples[i];
    ex.mixture.samples[i] = v;
  }
}

}  // namespace

TrainingExample SimulateTwoSpeaker(const Utterance& target,
                                   const Utterance& interferer, double sir_db,
                                   const std::optional<NoiseSpec>& noise) {
  if (target.speaker_id == interferer.speaker_id)
    throw RoleConflict("target and interferer are both speaker '" +
                       target.speaker_id + "'");
  if (target.wave.sample_rate != interferer.wave.sample_rate)
    throw ShapeError("target and interferer sample rates differ");
  const size_t n = std::min(target.wave.size(), interferer.wave.size());
  TrainingExample ex;
  ex.task = Task::kPse;
  ex.condition = noise ? Condition::kTwoSpeakerNoise : Condition::kTwoSpeaker;
  ex.target_speaker = target.speaker_id;
  ex.target_utt = target.utt_id;
  ex.interferer_speaker = interferer.speaker_id;
  ex.interferer_utt = interferer.utt_id;
  ex.id = target.utt_id + "__" + interferer.utt_id;

  ex.target = Waveform(Head(target.wave.samples, n), target.wave.sample_rate);
  std::vector<double> interf = Head(interferer.wave.samples, n);
  const double p_t = PowerOrThrow(ex.target.samples, "target");
  const double p_i = PowerOrThrow(interf, "interferer");
  ex.interferer_gain = std::sqrt(p_t / (p_i * std::pow(10.0, sir_db / 10.0)));
  for (double& v : interf) v *= ex.interferer_gain;
  ex.interferer = Waveform(std::move(interf), target.wave.sample_rate);
  ex.sir_db = sir_db;
  if (noise) AddNoise(ex, *noise);
  Assemble(ex);
  return ex;
}

TrainingExample SimulateNoisy(const Utterance& target, const NoiseSpec& noise) {
  TrainingExample ex;
  ex.task = Task::kSe;
  ex.condition = Condition::kOneSpeakerNoise;
  ex.target_speaker = target.speaker_id;
  ex.target_utt = target.utt_id;
  ex.id = target.utt_id + "__noise";
  ex.target = target.wave;
  PowerOrThrow(ex.target.samples, "target");
  AddNoise(ex, noise);
  Assemble(ex);
  return ex;
}

double MeasuredSirDb(const TrainingExample& ex) {
  return 10.0 * std::log10(MeanPower(ex.target.samples) /
                           MeanPower(ex.interferer.samples));
}

double MeasuredSnrDb(const TrainingExample& ex) {
  std::vector<double> speech = ex.target.samples;
  if (!ex.interferer.empty())
    for (size_t i = 0; i < speech.size(); ++i) speech[i] += ex.interferer.samples[i];
  return 10.0 * std::log10(MeanPower(speech) / MeanPower(ex.noise.samples));
}

TrainingExample CropExample(const TrainingExample& ex, size_t length,
                            uint64_t seed) {
  const size_t n = ex.mixture.size();
  if (length == 0 || n <= length) return ex;
  Rng rng = MakeRng(seed, kStreamCrop);
  const size_t offset = static_cast<size_t>(UniformInt(rng, 0, n - length));
  auto cut = [&](Waveform& w) {
    if (w.empty()) return;
    w.samples = std::vector<double>(w.samples.begin() + offset,
                                    w.samples.begin() + offset + length);
  };
  TrainingExample out = ex;
  cut(out.mixture);
  cut(out.target);
  cut(out.interferer);
  cut(out.noise);
  return out;
}

std::vector<TrainingExample> SimulateSet(const CorpusIndex& corpus,
                                         const std::vector<std::string>& speakers,
                                         const SimulationOptions& o) {
  const bool two = o.condition != Condition::kOneSpeakerNoise;
  if (speakers.size() < (two ? 2u : 1u))
    throw InvalidParams("simulation needs at least " +
                        std::to_string(two ? 2 : 1) + " speakers");
  if (o.count < 0) throw InvalidParams("simulation count must be >= 0");
  for (const auto& s : speakers)
    if (corpus.OfSpeaker(s).empty())
      throw InvalidParams("speaker '" + s + "' has no utterances");

  std::vector<TrainingExample> out;
  for (int i = 0; i < o.count; ++i) {
    Rng rng = MakeRng(o.seed, kStreamSimulate, i);
    auto pick = [&](const std::string& spk) -> const Utterance& {
      const auto& idx = corpus.OfSpeaker(spk);
      return corpus.utterances()[idx[UniformInt(rng, 0, idx.size() - 1)]];
    };
    const size_t t = UniformInt(rng, 0, speakers.size() - 1);
    const Utterance& target = pick(speakers[t]);
    std::optional<NoiseSpec> noise;
    if (o.condition != Condition::kTwoSpeaker) {
      const uint64_t noise_seed = DeriveSeed(o.seed, kStreamNoise, i);
      noise = NoiseSpec{PinkNoise(target.wave.size(), noise_seed,
                                  target.wave.sample_rate),
                        UniformReal(rng, o.snr_min_db, o.snr_max_db),
                        noise_seed};
    }
    TrainingExample ex;
    if (two) {
      size_t j = UniformInt(rng, 0, speakers.size() - 2);
      if (j >= t) ++j;
      const Utterance& interf = pick(speakers[j]);
      ex = SimulateTwoSpeaker(target, interf,
                              UniformReal(rng, o.sir_min_db, o.sir_max_db),
                              noise);
    } else {
      ex = SimulateNoisy(target, *noise);
    }
    ex.id = ConditionName(o.condition) + "_" + std::to_string(i);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace pse::data
