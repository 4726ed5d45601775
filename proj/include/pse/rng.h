// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <random>

namespace pse {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
uint64_t MixSeed(uint64_t x);

// Counter-based derivation: a distinct, reproducible seed for every
// (base, stream, index) triple. Used so that work item i of stream s can
// be generated without replaying items 0..i-1.
uint64_t DeriveSeed(uint64_t base, uint64_t stream, uint64_t index = 0);

inline Rng MakeRng(uint64_t base, uint64_t stream, uint64_t index = 0) {
  return Rng(DeriveSeed(base, stream, index));
}

double UniformReal(Rng& rng, double lo, double hi);
int64_t UniformInt(Rng& rng, int64_t lo, int64_t hi);  // inclusive
double StandardNormal(Rng& rng);

// Stream identifiers for DeriveSeed.
enum SeedStream : uint64_t {
  kStreamCorpus = 1,
  kStreamSpeaker = 2,
  kStreamUtterance = 3,
  kStreamNoise = 4,
  kStreamSimulate = 5,
  kStreamEnrollment = 6,
  kStreamBatch = 7,
  kStreamPlaceholder = 8,
  kStreamInit = 9,
  kStreamCrop = 10,
  kStreamEval = 11,
};

}  // namespace pse
