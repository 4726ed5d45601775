// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pse/data/corpus.h"
#include "pse/data/enrollment.h"
#include "pse/data/manifest.h"
#include "pse/data/simulate.h"
#include "pse/metrics/metrics.h"
#include "pse/model/params.h"

namespace pse::train {

struct EvalOptions {
  data::EnrollPolicy policy = data::EnrollPolicy::kRandom;
  std::string train_policy = "unspecified";
  PlaceholderMode placeholder = PlaceholderMode::kZeros;
  double placeholder_s = 3.0;
  uint64_t seed = 0;
  std::optional<metrics::PesqAdapter> pesq;
  std::string work_dir;  // where PESQ inputs are written
  std::string checkpoint_id;
  std::string manifest_id;
  // Items that failed to load; counted as skipped under their condition.
  std::vector<data::LoadFailure> load_failures;
};

// Enhances every example (SE items with a placeholder clue, PSE items with
// a clue drawn by `policy`) and scores it. Items whose scoring fails are
// skipped and counted. Errors: EmptyManifest on an empty set.
metrics::MetricsReport EvaluateCheckpoint(
    const ParameterStore& params, const std::vector<data::TrainingExample>& test,
    const data::CorpusIndex& corpus, const EvalOptions& options);

struct ConsistencyResult {
  double mae = 0.0;       // mean compressed-spectrum MAE between the outputs
  double sisdr_db = 0.0;  // mean SI-SDR over both outputs
  int items = 0;
};

// Runs every example with two different enrollments of its target speaker
// and compares the outputs.
ConsistencyResult EnrollmentConsistency(
    const ParameterStore& params, const std::vector<data::TrainingExample>& examples,
    const data::CorpusIndex& corpus, data::Pairing pairing, uint64_t seed);

}  // namespace pse::train
