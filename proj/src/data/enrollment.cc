// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/data/enrollment.h"

#include <algorithm>
#include <cmath>

#include "pse/error.h"

namespace pse::data {

std::string EnrollPolicyName(EnrollPolicy p) {
  switch (p) {
    case EnrollPolicy::kRandom: return "random";
    case EnrollPolicy::kFixed2s: return "fixed_2s";
    case EnrollPolicy::kUniform10to40s: return "uniform_10_40s";
    case EnrollPolicy::kShort: return "short";
  }
  return "random";
}

EnrollPolicy ParseEnrollPolicy(const std::string& name) {
  if (name == "random") return EnrollPolicy::kRandom;
  if (name == "fixed_2s") return EnrollPolicy::kFixed2s;
  if (name == "uniform_10_40s" || name == "long") return EnrollPolicy::kUniform10to40s;
  if (name == "short") return EnrollPolicy::kShort;
  throw InvalidInput("unknown enrollment policy '" + name + "'");
}

std::string PairingName(Pairing p) {
  switch (p) {
    case Pairing::kRandomRandom: return "random_random";
    case Pairing::kShortLong: return "short_long";
    case Pairing::kLongLong: return "long_long";
  }
  return "random_random";
}

Pairing ParsePairing(const std::string& name) {
  if (name == "random_random") return Pairing::kRandomRandom;
  if (name == "short_long") return Pairing::kShortLong;
  if (name == "long_long") return Pairing::kLongLong;
  throw InvalidInput("unknown pairing '" + name + "'");
}

std::vector<double> LoopPad(const std::vector<double>& x, size_t n) {
  if (x.empty()) throw InvalidInput("cannot loop-pad an empty signal");
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = x[i % x.size()];
  return out;
}

namespace {

// Utterances of `speaker` other than `exclude_utt`, as corpus indices.
std::vector<size_t> Candidates(const CorpusIndex& corpus,
                               const std::string& speaker,
                               const std::string& exclude_utt,
                               size_t needed) {
  std::vector<size_t> out;
  for (size_t i : corpus.OfSpeaker(speaker))
    if (corpus.utterances()[i].utt_id != exclude_utt) out.push_back(i);
  if (out.size() < needed)
    throw InsufficientEnrollment(
        "speaker '" + speaker + "' has " + std::to_string(out.size()) +
        " usable enrollment utterances, need " + std::to_string(needed));
  return out;
}

EnrollmentClue Crop(const Utterance& u, double seconds, Rng& rng) {
  const int rate = u.wave.sample_rate;
  const size_t n = static_cast<size_t>(std::llround(seconds * rate));
  std::vector<double> out;
  if (u.wave.size() >= n) {
    const size_t off = UniformInt(rng, 0, u.wave.size() - n);
    out.assign(u.wave.samples.begin() + off, u.wave.samples.begin() + off + n);
  } else {
    out = LoopPad(u.wave.samples, n);
  }
  return EnrollmentClue::Real(Waveform(std::move(out), rate), {u.utt_id});
}

// Concatenates utterances starting with `first`, then the rest in random
// order, cycling until a U[10, 40] s duration is reached.
EnrollmentClue Long(const CorpusIndex& corpus, std::vector<size_t> pool,
                    size_t first, Rng& rng) {
  const int rate = corpus.utterances()[first].wave.sample_rate;
  const double seconds = UniformReal(rng, 10.0, 40.0);
  const size_t n = static_cast<size_t>(std::llround(seconds * rate));
  std::erase(pool, first);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.insert(pool.begin(), first);

  std::vector<double> out;
  std::vector<std::string> sources;
  for (size_t k = 0; out.size() < n; k = (k + 1) % pool.size()) {
    const Utterance& u = corpus.utterances()[pool[k]];
    if (u.wave.empty()) throw InvalidInput("empty utterance '" + u.utt_id + "'");
    out.insert(out.end(), u.wave.samples.begin(), u.wave.samples.end());
    sources.push_back(u.utt_id);
  }
  out.resize(n);
  return EnrollmentClue::Real(Waveform(std::move(out), rate), std::move(sources));
}

size_t Draw(const std::vector<size_t>& pool, Rng& rng) {
  return pool[UniformInt(rng, 0, pool.size() - 1)];
}

EnrollmentClue FromPool(const CorpusIndex& corpus,
                        const std::vector<size_t>& pool, size_t chosen,
                        EnrollPolicy policy, Rng& rng) {
  const Utterance& u = corpus.utterances()[chosen];
  switch (policy) {
    case EnrollPolicy::kRandom:
      return EnrollmentClue::Real(u.wave, {u.utt_id});
    case EnrollPolicy::kFixed2s:
      return Crop(u, 2.0, rng);
    case EnrollPolicy::kShort:
      return Crop(u, UniformReal(rng, 0.5, 2.0), rng);
    case EnrollPolicy::kUniform10to40s:
      return Long(corpus, pool, chosen, rng);
  }
  throw InvalidInput("unhandled enrollment policy");
}

}  // namespace

EnrollmentClue SampleEnrollment(const CorpusIndex& corpus,
                                const std::string& speaker,
                                const std::string& exclude_utt,
                                EnrollPolicy policy, Rng& rng) {
  const auto pool = Candidates(corpus, speaker, exclude_utt, 1);
  return FromPool(corpus, pool, Draw(pool, rng), policy, rng);
}

std::pair<EnrollmentClue, EnrollmentClue> PairEnrollments(
    const CorpusIndex& corpus, const std::string& speaker,
    const std::string& exclude_utt, Pairing pairing, Rng& rng) {
  const size_t needed = pairing == Pairing::kRandomRandom ? 2 : 1;
  const auto pool = Candidates(corpus, speaker, exclude_utt, needed);
  const size_t a = Draw(pool, rng);
  size_t b = a;
  if (pool.size() > 1) {
    std::vector<size_t> rest = pool;
    std::erase(rest, a);
    b = Draw(rest, rng);
  }
  switch (pairing) {
    case Pairing::kRandomRandom: {
      EnrollmentClue first = FromPool(corpus, pool, a, EnrollPolicy::kRandom, rng);
      return {first, FromPool(corpus, pool, b, EnrollPolicy::kRandom, rng)};
    }
    case Pairing::kShortLong: {
      EnrollmentClue first = FromPool(corpus, pool, a, EnrollPolicy::kFixed2s, rng);
      return {first, FromPool(corpus, pool, b, EnrollPolicy::kUniform10to40s, rng)};
    }
    case Pairing::kLongLong: {
      EnrollmentClue first =
          FromPool(corpus, pool, a, EnrollPolicy::kUniform10to40s, rng);
      return {first,
              FromPool(corpus, pool, b, EnrollPolicy::kUniform10to40s, rng)};
    }
  }
  throw InvalidInput("unhandled pairing");
}

}  // namespace pse::data
