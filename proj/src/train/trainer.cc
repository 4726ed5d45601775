// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/train/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "pse/data/batch.h"
#include "pse/data/enrollment.h"
#include "pse/error.h"
#include "pse/losses.h"
#include "pse/metrics/metrics.h"
#include "pse/nn/ops.h"
#include "pse/rng.h"

namespace pse::train {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json Component(const losses::LossValue& v, const char* name) {
  auto it = v.components.find(name);
  return it == v.components.end() ? json(nullptr) : json(it->second);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IOError("write failed for '" + path.string() + "'");
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// `count` distinct pool indices (cycling when the pool is smaller).
std::vector<size_t> DrawIndices(size_t pool, int count, Rng& rng) {
  std::vector<size_t> order(pool);
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<size_t> out;
  while (static_cast<int>(out.size()) < count) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t i : order)
      if (static_cast<int>(out.size()) < count) out.push_back(i);
  }
  return out;
}

}  // namespace

json StepRecord::ToJson() const {
  json tags = json::array();
  for (data::Task t : tasks) tags.push_back(data::TaskName(t));
  return {{"step", step},
          {"epoch", epoch},
          {"lr", lr},
          {"total", loss.total},
          {"sisdr_1", Component(loss, "sisdr_1")},
          {"sisdr_2", Component(loss, "sisdr_2")},
          {"heit", Component(loss, "heit")},
          {"grad_norm_pre_clip", grad_norm_pre_clip},
          {"tasks", tags}};
}

json CheckpointMeta::ToJson() const {
  return {{"epoch", epoch},
          {"step", step},
          {"lr", lr},
          {"best_dev_sisdr",
           std::isfinite(best_dev_sisdr) ? json(best_dev_sisdr) : json(nullptr)},
          {"best_epoch", best_epoch},
          {"rng_states", {{"scheme", "counter"}, {"seed", seed}, {"next_step", step}}}};
}

CheckpointMeta CheckpointMeta::FromJson(const json& j) {
  CheckpointMeta m;
  try {
    m.epoch = j.at("epoch");
    m.step = j.at("step");
    m.lr = j.at("lr");
    const json& best = j.at("best_dev_sisdr");
    m.best_dev_sisdr = best.is_null() ? -std::numeric_limits<double>::infinity()
                                      : best.get<double>();
    m.best_epoch = j.at("best_epoch");
    m.seed = j.at("rng_states").at("seed");
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint meta: ") + e.what());
  }
  return m;
}

std::string CheckpointDir(const std::string& out_dir, int epoch) {
  return (fs::path(out_dir) / "ckpt" / ("epoch_" + std::to_string(epoch))).string();
}

std::string BestCheckpointDir(const std::string& out_dir) {
  std::string name = ReadText(fs::path(out_dir) / "ckpt" / "best");
  while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back())))
    name.pop_back();
  return (fs::path(out_dir) / "ckpt" / name).string();
}

Trainer::Trainer(ModelConfig model, TrainConfig config, TrainData data,
                 std::string out_dir)
    : model_(std::move(model)),
      config_(std::move(config)),
      data_(std::move(data)),
      out_dir_(std::move(out_dir)),
      adam_(config_.adam_beta1, config_.adam_beta2, config_.adam_eps) {
  config_.Validate();
  if (data_.pse_pool.empty())
    throw InvalidParams("training needs a non-empty PSE pool");
  if (config_.regime == Regime::kUsef && config_.batch.se_items > 0 &&
      data_.se_pool.empty())
    throw InvalidParams("usef with N > 0 needs a non-empty SE pool");
  index_ = std::make_unique<data::CorpusIndex>(data_.corpus);
  params_ = model_.InitParameters(config_.seed);
  meta_.seed = config_.seed;
  steps_per_epoch_ = config_.steps_per_epoch > 0
      ? config_.steps_per_epoch
      : static_cast<int>((data_.pse_pool.size() + config_.BatchSize() - 1) /
                         config_.BatchSize());
  steps_per_epoch_ = std::max(steps_per_epoch_, 1);
  if (!out_dir_.empty()) fs::create_directories(fs::path(out_dir_) / "ckpt");
}

Trainer::~Trainer() = default;

std::vector<Trainer::Item> Trainer::DrawBatch(int64_t step) const {
  const uint64_t seed = config_.seed;
  Rng rng = MakeRng(seed, kStreamBatch, step);
  const int rate = model_.config().sample_rate;
  const size_t segment = static_cast<size_t>(std::llround(config_.segment_s * rate));

  std::vector<Item> items;
  if (config_.regime == Regime::kUsef) {
    data::CompositionOptions opt;
    opt.placeholder = config_.placeholder;
    opt.placeholder_length = segment;
    opt.sample_clue = [&](const data::TrainingExample& ex, Rng& r) {
      return data::SampleEnrollment(*index_, ex.target_speaker, ex.target_utt,
                                    config_.enroll_policy, r);
    };
    data::MiniBatchSpec spec = config_.batch;
    spec.seed = DeriveSeed(seed, kStreamBatch, step);
    for (auto& ex : data::ComposeUnifiedBatch(data_.pse_pool, data_.se_pool, spec, opt)) {
      auto clues = ex.clues;
      items.push_back({std::move(ex), std::move(clues)});
    }
  } else {
    const auto picks =
        DrawIndices(data_.pse_pool.size(), config_.BatchSize(), rng);
    for (size_t i : picks) {
      const data::TrainingExample& ex = data_.pse_pool[i];
      Rng clue_rng = MakeRng(seed, kStreamEnrollment,
                             static_cast<uint64_t>(step) * 4096 + items.size());
      std::vector<EnrollmentClue> clues;
      if (config_.regime == Regime::kSef) {
        clues.push_back(data::SampleEnrollment(*index_, ex.target_speaker,
                                               ex.target_utt,
                                               config_.enroll_policy, clue_rng));
      } else {
        const data::Pairing pairing = config_.regime == Regime::kLsep
                                          ? data::Pairing::kShortLong
                                          : config_.pairing;
        if (config_.tie_clues) {
          auto c = data::SampleEnrollment(*index_, ex.target_speaker,
                                          ex.target_utt, config_.enroll_policy,
                                          clue_rng);
          clues = {c, c};
        } else {
          auto [a, b] = data::PairEnrollments(*index_, ex.target_speaker,
                                              ex.target_utt, pairing, clue_rng);
          clues = {std::move(a), std::move(b)};
        }
      }
      data::TrainingExample copy = ex;
      copy.task = data::Task::kPse;
      items.push_back({std::move(copy), std::move(clues)});
    }
  }
  for (size_t i = 0; i < items.size(); ++i)
    items[i].example = data::CropExample(
        items[i].example, segment,
        DeriveSeed(seed, kStreamCrop, static_cast<uint64_t>(step) * 4096 + i));
  return items;
}

StepRecord Trainer::Step() {
  const int epoch = static_cast<int>(meta_.step / steps_per_epoch_);
  StepRecord rec;
  rec.step = meta_.step;
  rec.epoch = epoch;
  rec.lr = LrAtEpoch(std::min(epoch, config_.total_epochs - 1), config_);

  const auto items = DrawBatch(meta_.step);
  const double scale = 1.0 / static_cast<double>(items.size());
  const bool paired = config_.regime == Regime::kDsef ||
                      config_.regime == Regime::kLsep;
  std::vector<losses::LossValue> values;
  params_.ZeroGrad();
  try {
    for (const Item& item : items) {
      const auto& ex = item.example;
      rec.tasks.push_back(ex.task);
      losses::GradLoss loss;
      if (paired) {
        const auto y1 = model_.Forward(ex.mixture, item.clues[0], params_);
        const auto y2 = model_.Forward(ex.mixture, item.clues[1], params_);
        loss = losses::DsefLoss(y1.wave, y1.spec, y2.wave, y2.spec,
                                ex.target.samples, config_.lambda_heit,
                                config_.heit_norm);
      } else {
        const auto y = model_.Forward(ex.mixture, item.clues[0], params_);
        loss = losses::UsefLoss(y.wave, ex.target.samples);
      }
      if (!std::isfinite(loss.value.total))
        throw NumericalError("loss", "non-finite loss on item '" + ex.id + "'");
      nn::Backward(nn::Scale(loss.total, scale));
      values.push_back(loss.value);
    }
    auto grads = CollectGradients(params_);
    rec.grad_norm_pre_clip = ClipGradients(grads, config_.grad_clip_norm);
    adam_.Step(params_, grads, rec.lr);
    params_.ZeroGrad();
    params_.CheckFinite();
  } catch (const NumericalError& e) {
    throw NumericalError(e.where(), "step " + std::to_string(meta_.step) +
                                        ": " + e.what());
  }
  rec.loss = losses::BatchMean(values);
  ++meta_.step;

  if (!out_dir_.empty()) {
    std::ofstream log(fs::path(out_dir_) / "train_log.jsonl", std::ios::app);
    if (!log) throw IOError("cannot append to the training log in '" + out_dir_ + "'");
    log << rec.ToJson().dump() << '\n';
  }
  records_.push_back(rec);
  if (on_step) on_step(rec);
  return rec;
}

double Trainer::DevSiSdr() const {
  if (data_.dev.empty()) return std::numeric_limits<double>::quiet_NaN();
  const int rate = model_.config().sample_rate;
  const size_t placeholder = static_cast<size_t>(std::llround(config_.segment_s * rate));
  double total = 0.0;
  for (size_t i = 0; i < data_.dev.size(); ++i) {
    const auto& ex = data_.dev[i];
    Rng rng = MakeRng(config_.seed, kStreamEval, i);
    const EnrollmentClue clue =
        ex.task == data::Task::kSe
            ? MakePlaceholder(config_.placeholder, placeholder, config_.seed, rate)
            : data::SampleEnrollment(*index_, ex.target_speaker, ex.target_utt,
                                     data::EnrollPolicy::kRandom, rng);
    total += metrics::SiSdr(Enhance(model_, ex.mixture, clue, params_).wave,
                            ex.target);
  }
  return total / static_cast<double>(data_.dev.size());
}

void Trainer::WriteCheckpoint(double dev) {
  if (out_dir_.empty()) return;
  const fs::path dir = CheckpointDir(out_dir_, meta_.epoch);
  fs::create_directories(dir);
  SaveParameters((dir / "params.bin").string(), params_);
  WriteArchive((dir / "optim.bin").string(), adam_.ToArchive());
  json meta = meta_.ToJson();
  meta["dev_sisdr"] = std::isfinite(dev) ? json(dev) : json(nullptr);
  meta["train_config"] = config_;
  WriteText(dir / "meta.json", meta.dump(2) + "\n");
  if (meta_.best_epoch == meta_.epoch)
    WriteText(fs::path(out_dir_) / "ckpt" / "best",
              "epoch_" + std::to_string(meta_.epoch) + "\n");
}

void Trainer::Run(int max_epochs) {
  int done = 0;
  while (meta_.epoch < config_.total_epochs && (max_epochs < 0 || done < max_epochs)) {
    const int64_t end = static_cast<int64_t>(meta_.epoch + 1) * steps_per_epoch_;
    while (meta_.step < end) Step();
    meta_.lr = LrAtEpoch(meta_.epoch, config_);
    ++meta_.epoch;
    ++done;
    const double dev = DevSiSdr();
    // Without a dev set the latest epoch counts as best.
    if (!std::isfinite(dev) || dev > meta_.best_dev_sisdr) {
      if (std::isfinite(dev)) meta_.best_dev_sisdr = dev;
      meta_.best_epoch = meta_.epoch;
    }
    WriteCheckpoint(dev);
    if (on_epoch) on_epoch(meta_, dev);
  }
}

void Trainer::Resume(const std::string& checkpoint_dir) {
  const fs::path dir(checkpoint_dir);
  json meta;
  try {
    meta = json::parse(ReadText(dir / "meta.json"));
  } catch (const json::exception& e) {
    throw CheckpointError("'" + (dir / "meta.json").string() + "': " + e.what());
  }
  CheckpointMeta restored = CheckpointMeta::FromJson(meta);
  if (restored.seed != config_.seed)
    throw CheckpointError("checkpoint seed " + std::to_string(restored.seed) +
                          " differs from the configured seed " +
                          std::to_string(config_.seed));
  ParameterStore params = LoadParameters((dir / "params.bin").string());
  if (!(params.config == model_.config()))
    throw CheckpointError("checkpoint model config differs from the configured model");
  adam_.Restore(ReadArchive((dir / "optim.bin").string()), params);
  params_ = std::move(params);
  meta_ = restored;
}

}  // namespace pse::train
