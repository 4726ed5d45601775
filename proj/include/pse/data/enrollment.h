// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Enrollment sampling for the target speaker of a mixture.

#pragma once

#include <string>
#include <utility>

#include "pse/clue.h"
#include "pse/data/corpus.h"
#include "pse/rng.h"

namespace pse::data {

enum class EnrollPolicy {
  kRandom,         // one whole utterance
  kFixed2s,        // random 2 s crop, loop-padded when shorter
  kUniform10to40s, // U[10, 40] s of concatenated utterances
  kShort,          // evaluation bucket: U[0.5, 2] s crop
};
std::string EnrollPolicyName(EnrollPolicy p);  // random, fixed_2s, uniform_10_40s, short
EnrollPolicy ParseEnrollPolicy(const std::string& name);

enum class Pairing { kRandomRandom, kShortLong, kLongLong };
std::string PairingName(Pairing p);  // random_random, short_long, long_long
Pairing ParsePairing(const std::string& name);

// A real clue of `speaker` that never uses `exclude_utt`.
// Errors: InsufficientEnrollment when the speaker has fewer than 2
// utterances (counting exclude_utt).
EnrollmentClue SampleEnrollment(const CorpusIndex& corpus,
                                const std::string& speaker,
                                const std::string& exclude_utt,
                                EnrollPolicy policy, Rng& rng);

// Two clues of the same speaker. random_random draws two distinct
// utterances (needs 3 utterances); short_long is (fixed_2s, 10-40 s);
// long_long is two 10-40 s clues. The long clues start from different
// utterances than the other clue when the speaker has enough of them.
std::pair<EnrollmentClue, EnrollmentClue> PairEnrollments(
    const CorpusIndex& corpus, const std::string& speaker,
    const std::string& exclude_utt, Pairing pairing, Rng& rng);

// Repeats x until it is at least n long, then keeps the first n samples.
std::vector<double> LoopPad(const std::vector<double>& x, size_t n);

}  // namespace pse::data
