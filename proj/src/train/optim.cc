// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/train/optim.h"

#include <algorithm>
#include <cmath>

#include "pse/error.h"

namespace pse::train {

double LrAtEpoch(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.total_epochs)
    throw InvalidInput("epoch " + std::to_string(epoch) + " outside [0, " +
                       std::to_string(cfg.total_epochs) + ")");
  const int phase1 = std::min(epoch, cfg.phase1_epochs) / cfg.decay_every;
  const int phase2 = std::max(epoch - cfg.phase1_epochs, 0) / cfg.decay_every;
  return cfg.base_lr * std::pow(cfg.decay_factor_phase1, phase1) *
         std::pow(cfg.decay_factor_phase2, phase2);
}

double GlobalNorm(const NamedArrays& arrays) {
  double sum = 0.0;
  for (const auto& [name, t] : arrays)
    for (double v : t.values()) sum += v * v;
  return std::sqrt(sum);
}

double ClipGradients(NamedArrays& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw InvalidParams("max_norm must be positive");
  for (const auto& [name, t] : grads)
    if (!t.AllFinite()) throw NumericalError(name, "non-finite gradient");
  const double norm = GlobalNorm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, t] : grads)
      for (double& v : t.values()) v *= scale;
  }
  return norm;
}

NamedArrays CollectGradients(const ParameterStore& params) {
  NamedArrays out;
  for (const auto& name : params.names()) {
    const nn::Var& p = params.Get(name);
    out.emplace_back(name, p.grad().size() ? p.grad() : nn::Tensor(p.shape()));
  }
  return out;
}

Adam::Adam(double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::Step(ParameterStore& params, const NamedArrays& grads, double lr) {
  if (first_.empty())
    for (const auto& [name, g] : grads) {
      first_.emplace_back(name, nn::Tensor(g.shape()));
      second_.emplace_back(name, nn::Tensor(g.shape()));
    }
  if (first_.size() != grads.size())
    throw InvalidState("optimizer state tracks " + std::to_string(first_.size()) +
                       " arrays, got " + std::to_string(grads.size()));
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (size_t a = 0; a < grads.size(); ++a) {
    const auto& [name, g] = grads[a];
    nn::Tensor& p = params.MutableValue(name);
    nn::Tensor& m = first_[a].second;
    nn::Tensor& v = second_[a].second;
    for (int64_t i = 0; i < g.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

Archive Adam::ToArchive() const {
  Archive a;
  a.header = {{"kind", "adam"},
              {"beta1", beta1_},
              {"beta2", beta2_},
              {"eps", eps_},
              {"steps", steps_}};
  for (size_t i = 0; i < first_.size(); ++i) {
    a.arrays.emplace_back("m." + first_[i].first, first_[i].second);
    a.arrays.emplace_back("v." + second_[i].first, second_[i].second);
  }
  return a;
}

void Adam::Restore(const Archive& a, const ParameterStore& params) {
  try {
    if (a.header.at("kind") != "adam")
      throw CheckpointError("optimizer archive is not Adam state");
    beta1_ = a.header.at("beta1");
    beta2_ = a.header.at("beta2");
    eps_ = a.header.at("eps");
    steps_ = a.header.at("steps");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("optimizer header: ") + e.what());
  }
  first_.clear();
  second_.clear();
  if (a.arrays.empty()) return;  // saved before the first step
  const auto& names = params.names();
  if (a.arrays.size() != 2 * names.size())
    throw CheckpointError("optimizer state size does not match the model");
  for (size_t i = 0; i < names.size(); ++i) {
    const auto& [mn, m] = a.arrays[2 * i];
    const auto& [vn, v] = a.arrays[2 * i + 1];
    if (mn != "m." + names[i] || vn != "v." + names[i] ||
        m.shape() != params.Get(names[i]).shape() || v.shape() != m.shape())
      throw CheckpointError("optimizer state mismatch at '" + names[i] + "'");
    first_.emplace_back(names[i], m);
    second_.emplace_back(names[i], v);
  }
}

}  // namespace pse::train
