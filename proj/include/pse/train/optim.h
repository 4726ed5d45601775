// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Learning-rate schedule, global-norm clipping and the Adam update.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pse/model/params.h"
#include "pse/train/config.h"

namespace pse::train {

// base * f1^floor(min(e, P1) / every) * f2^floor(max(e - P1, 0) / every).
// Errors: InvalidInput unless 0 <= epoch < total_epochs.
double LrAtEpoch(int epoch, const TrainConfig& cfg);

using NamedArrays = std::vector<std::pair<std::string, nn::Tensor>>;

double GlobalNorm(const NamedArrays& arrays);
// Scales every array by max_norm / norm when the global norm exceeds
// max_norm. Returns the norm before clipping.
// Errors: NumericalError naming the first non-finite array.
double ClipGradients(NamedArrays& grads, double max_norm);

// Gradients of every parameter in declaration order; zeros where no
// gradient arrived.
NamedArrays CollectGradients(const ParameterStore& params);

class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // One bias-corrected update of every parameter.
  void Step(ParameterStore& params, const NamedArrays& grads, double lr);

  int64_t steps() const { return steps_; }
  // Moments and step count, for checkpoints.
  Archive ToArchive() const;
  // Errors: CheckpointError when the state does not match params.
  void Restore(const Archive& archive, const ParameterStore& params);

 private:
  double beta1_, beta2_, eps_;
  int64_t steps_ = 0;
  NamedArrays first_, second_;
};

}  // namespace pse::train
