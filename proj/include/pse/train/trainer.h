// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Optimization loop shared by all regimes.
//
// Every random choice of step s (items, crops, clues, placeholders) is
// drawn from generators seeded by (seed, stream, s), so a run resumed from
// a checkpoint replays exactly the steps an uninterrupted run would take.

#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "pse/data/corpus.h"
#include "pse/data/simulate.h"
#include "pse/model/sefpnet.h"
#include "pse/train/config.h"
#include "pse/train/optim.h"

namespace pse::train {

struct TrainData {
  std::vector<data::Utterance> corpus;           // enrollment source
  std::vector<data::TrainingExample> pse_pool;   // target + interferer/noise
  std::vector<data::TrainingExample> se_pool;    // single-speaker noisy (usef)
  std::vector<data::TrainingExample> dev;        // best-model selection
};

struct StepRecord {
  int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  losses::LossValue loss;
  double grad_norm_pre_clip = 0.0;
  std::vector<data::Task> tasks;

  // {step, epoch, lr, total, sisdr_1, sisdr_2, heit, grad_norm_pre_clip,
  // tasks}; absent components are null.
  nlohmann::json ToJson() const;
};

struct CheckpointMeta {
  int epoch = 0;      // completed epochs
  int64_t step = 0;   // completed optimizer steps
  double lr = 0.0;    // rate of the last completed epoch
  double best_dev_sisdr = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  uint64_t seed = 0;  // base of every counter-derived generator

  nlohmann::json ToJson() const;
  static CheckpointMeta FromJson(const nlohmann::json& j);
};

class Trainer {
 public:
  // out_dir may be empty: no logs or checkpoints are written.
  // Errors: ConfigError on invalid configs, InvalidParams when the data
  // cannot feed the regime.
  Trainer(ModelConfig model, TrainConfig config, TrainData data,
          std::string out_dir = "");
  ~Trainer();

  // Restores parameters, optimizer moments and counters from
  // <out_dir>/ckpt/epoch_k (or any directory with that layout).
  // Errors: CheckpointError, IOError.
  void Resume(const std::string& checkpoint_dir);

  // One optimizer step. Errors: NumericalError naming the step and layer,
  // CompositionError from the batch composer.
  StepRecord Step();
  // Runs whole epochs until total_epochs, or at most max_epochs more.
  // Writes a checkpoint after each epoch.
  void Run(int max_epochs = -1);

  // Mean SI-SDR of the dev set under the current parameters.
  double DevSiSdr() const;

  const SefPNet& model() const { return model_; }
  const ParameterStore& params() const { return params_; }
  const CheckpointMeta& meta() const { return meta_; }
  const std::vector<StepRecord>& records() const { return records_; }
  int steps_per_epoch() const { return steps_per_epoch_; }

  std::function<void(const StepRecord&)> on_step;
  std::function<void(const CheckpointMeta&, double dev_sisdr)> on_epoch;

 private:
  struct Item {
    data::TrainingExample example;
    std::vector<EnrollmentClue> clues;
  };
  std::vector<Item> DrawBatch(int64_t step) const;
  void WriteCheckpoint(double dev_sisdr);

  SefPNet model_;
  TrainConfig config_;
  TrainData data_;
  std::unique_ptr<data::CorpusIndex> index_;
  std::string out_dir_;
  ParameterStore params_;
  Adam adam_;
  CheckpointMeta meta_;
  int steps_per_epoch_ = 1;
  std::vector<StepRecord> records_;
};

// Directory of the checkpoint written after `epoch` completed epochs.
std::string CheckpointDir(const std::string& out_dir, int epoch);
// Target of the <out_dir>/ckpt/best pointer. Errors: IOError.
std::string BestCheckpointDir(const std::string& out_dir);

}  // namespace pse::train
