// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/train/evaluate.h"

#include <cmath>
#include <filesystem>
#include <map>

#include "pse/dsp/wav_io.h"
#include "pse/error.h"
#include "pse/losses.h"
#include "pse/model/sefpnet.h"
#include "pse/rng.h"

namespace pse::train {

namespace fs = std::filesystem;

metrics::MetricsReport EvaluateCheckpoint(
    const ParameterStore& params, const std::vector<data::TrainingExample>& test,
    const data::CorpusIndex& corpus, const EvalOptions& o) {
  if (test.empty() && o.load_failures.empty())
    throw EmptyManifest("evaluation set is empty");
  const SefPNet model(params.config);
  const int rate = params.config.sample_rate;
  metrics::MetricsReport report;
  report.checkpoint_id = o.checkpoint_id;
  report.manifest_id = o.manifest_id;
  report.seed = o.seed;
  std::map<std::string, int> skipped;
  for (const auto& f : o.load_failures) ++skipped[f.condition];

  for (size_t i = 0; i < test.size(); ++i) {
    const auto& ex = test[i];
    const std::string condition = data::ConditionName(ex.condition);
    try {
      Rng rng = MakeRng(o.seed, kStreamEval, i);
      const EnrollmentClue clue =
          ex.task == data::Task::kSe
              ? MakePlaceholder(o.placeholder,
                                static_cast<size_t>(std::llround(o.placeholder_s * rate)),
                                o.seed, rate)
              : data::SampleEnrollment(corpus, ex.target_speaker, ex.target_utt,
                                       o.policy, rng);
      const Waveform est = Enhance(model, ex.mixture, clue, params).wave;
      metrics::ItemScore s;
      s.utt_id = ex.id;
      s.condition = condition;
      s.sisdr_db = metrics::SiSdr(est, ex.target);
      s.mixture_sisdr_db = metrics::SiSdr(ex.mixture, ex.target);
      s.stoi = metrics::Stoi(est, ex.target);
      if (o.pesq) {
        const fs::path dir = o.work_dir.empty() ? fs::temp_directory_path() : fs::path(o.work_dir);
        const std::string ref_path = (dir / (ex.id + "_ref.wav")).string();
        const std::string est_path = (dir / (ex.id + "_est.wav")).string();
        WriteWav(ref_path, ex.target);
        WriteWav(est_path, est);
        s.pesq = o.pesq->Score(ref_path, est_path);
      }
      report.items.push_back(std::move(s));
    } catch (const NumericalError&) {
      throw;
    } catch (const Error&) {
      ++skipped[condition];
    }
  }
  if (report.items.empty())
    throw EmptyManifest("no evaluation item could be scored");
  report.rows = metrics::SummarizeRows(
      report.items, o.train_policy, data::EnrollPolicyName(o.policy),
      {skipped.begin(), skipped.end()});
  return report;
}

ConsistencyResult EnrollmentConsistency(
    const ParameterStore& params, const std::vector<data::TrainingExample>& examples,
    const data::CorpusIndex& corpus, data::Pairing pairing, uint64_t seed) {
  const SefPNet model(params.config);
  ConsistencyResult out;
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    Rng rng = MakeRng(seed, kStreamEval, i);
    const auto [a, b] = data::PairEnrollments(corpus, ex.target_speaker,
                                              ex.target_utt, pairing, rng);
    const Enhanced ya = Enhance(model, ex.mixture, a, params);
    const Enhanced yb = Enhance(model, ex.mixture, b, params);
    out.mae += losses::HeitLoss(ya.spec, yb.spec);
    out.sisdr_db += 0.5 * (metrics::SiSdr(ya.wave, ex.target) +
                           metrics::SiSdr(yb.wave, ex.target));
    ++out.items;
  }
  if (out.items > 0) {
    out.mae /= out.items;
    out.sisdr_db /= out.items;
  }
  return out;
}

}  // namespace pse::train
