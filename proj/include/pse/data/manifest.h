// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// JSONL manifests for corpora and simulated sets. Audio paths are stored
// relative to the manifest's directory.

#pragma once

#include <string>
#include <vector>

#include "pse/data/corpus.h"
#include "pse/data/simulate.h"

namespace pse::data {

struct CorpusRecord {
  std::string utt_id;
  std::string speaker_id;
  std::string path;
  double duration_s = 0.0;
  int sample_rate = 8000;
};

// Writes <dir>/audio/<utt_id>.wav and <dir>/corpus.jsonl.
// Returns the manifest path. Errors: IOError.
std::string WriteCorpus(const std::string& dir,
                        const std::vector<Utterance>& utterances);
std::vector<CorpusRecord> ReadCorpusManifest(const std::string& path);
// Errors: IOError on unreadable files, EmptyManifest on zero records.
std::vector<Utterance> LoadCorpus(const std::string& manifest_path);

// Writes <dir>/<name>/<id>_{mix,target}.wav and <dir>/<name>.jsonl with
// the simulation metadata. Returns the manifest path.
std::string WriteExampleSet(const std::string& dir, const std::string& name,
                            const std::vector<TrainingExample>& examples,
                            uint64_t seed);
struct LoadFailure {
  std::string id;
  std::string condition;
  std::string message;
};

// Mixture, target and metadata; stored components are not reloaded.
// With `failures`, items whose audio cannot be read are skipped and listed
// there instead of raising. Errors: IOError, EmptyManifest.
std::vector<TrainingExample> LoadExampleSet(
    const std::string& manifest_path, std::vector<LoadFailure>* failures = nullptr);

}  // namespace pse::data
