#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "pse/data/corpus.h"
#include "pse/error.h"
#include "pse/rng.h"
#include "pse/train/evaluate.h"
#include "pse/train/trainer.h"

using namespace pse;
using namespace pse::train;
namespace fs = std::filesystem;

namespace {

// Independent schedule: walk the epochs and decay at each window boundary.
double LoopLr(int epoch, const TrainConfig& c) {
  double lr = c.base_lr;
  for (int e = 1; e <= epoch; ++e)
    if (e % c.decay_every == 0)
      lr *= e <= c.phase1_epochs ? c.decay_factor_phase1 : c.decay_factor_phase2;
  return lr;
}

NamedArrays RandomGrads(uint64_t seed, double scale) {
  Rng rng(seed);
  NamedArrays g;
  for (int a = 0; a < 4; ++a) {
    nn::Tensor t({3, 5});
    for (double& v : t.values()) v = scale * StandardNormal(rng);
    g.emplace_back("p" + std::to_string(a), t);
  }
  return g;
}

ModelConfig TinyConfig() {
  ModelConfig c;
  c.num_encoder_blocks = c.num_decoder_blocks = 3;
  c.base_channels = 4;
  c.tcn_layers = 1;
  c.tcn_blocks_per_layer = 2;
  c.stft.window_ms = 8;
  c.stft.hop_ms = 4;
  c.stft.fft_size = 64;
  return c;
}

TrainData SmallData() {
  const auto corpus = data::GenSyntheticCorpus(
      {.num_speakers = 6, .utts_per_speaker = 4, .min_duration_s = 1.0,
       .max_duration_s = 1.5, .seed = 3});
  TrainData d;
  d.corpus = corpus.utterances;
  const data::CorpusIndex index(d.corpus);
  const auto speakers = index.Speakers();
  d.pse_pool = data::SimulateSet(
      index, speakers, {.condition = data::Condition::kTwoSpeaker, .count = 6, .seed = 1});
  d.se_pool = data::SimulateSet(
      index, speakers, {.condition = data::Condition::kOneSpeakerNoise, .count = 4, .seed = 2});
  d.dev = {d.pse_pool[0]};
  return d;
}

TrainConfig FastConfig(Regime regime) {
  TrainConfig c;
  c.regime = regime;
  c.segment_s = 0.5;
  c.total_epochs = 4;
  c.phase1_epochs = 2;
  c.steps_per_epoch = 2;
  c.batch = {.pse_items = 1, .se_items = 1, .dsef_items = 2};
  c.seed = 11;
  return c;
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pse_test_train_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("learning-rate schedule matches the loop oracle") {
  const TrainConfig c;
  CHECK(LrAtEpoch(0, c) == 5e-4);
  CHECK(LrAtEpoch(10, c) == doctest::Approx(4.5196e-4).epsilon(1e-4));
  double prev = LrAtEpoch(0, c);
  for (int e = 0; e < c.total_epochs; ++e) {
    const double lr = LrAtEpoch(e, c);
    const double closed = c.base_lr * std::pow(0.98, std::min(e, 100) / 2) *
                          std::pow(0.9, std::max(e - 100, 0) / 2);
    CHECK(std::abs(lr - LoopLr(e, c)) <= 1e-18);
    CHECK(std::abs(lr - closed) <= 1e-18);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK(LrAtEpoch(102, c) == doctest::Approx(LrAtEpoch(100, c) * 0.9));
  CHECK_THROWS_AS(LrAtEpoch(-1, c), InvalidInput);
  CHECK_THROWS_AS(LrAtEpoch(120, c), InvalidInput);
}

TEST_CASE("gradient clipping") {
  NamedArrays halved = {{"a", nn::Tensor({2}, {2.0, 0.0})}};
  CHECK(ClipGradients(halved, 1.0) == doctest::Approx(2.0));
  CHECK(halved[0].second[0] == doctest::Approx(1.0));

  NamedArrays small = {{"a", nn::Tensor({2}, {0.3, 0.0})}};
  ClipGradients(small, 1.0);
  CHECK(small[0].second[0] == 0.3);

  for (uint64_t s = 0; s < 20; ++s) {
    NamedArrays g = RandomGrads(s, s % 2 ? 1.0 : 0.05);
    const double pre = ClipGradients(g, 1.0);
    CHECK(std::abs(GlobalNorm(g) - std::min(pre, 1.0)) <= 1e-9);
    NamedArrays twice = g;
    ClipGradients(twice, 1.0);
    for (size_t a = 0; a < g.size(); ++a)
      for (int64_t i = 0; i < g[a].second.size(); ++i)
        CHECK(std::abs(twice[a].second[i] - g[a].second[i]) <= 1e-12);
  }
  NamedArrays bad = {{"layer.w", nn::Tensor({1}, {std::nan("")})}};
  CHECK_THROWS_WITH_AS(ClipGradients(bad, 1.0), doctest::Contains("layer.w"),
                       NumericalError);
}

TEST_CASE("train config json round trip and validation") {
  TrainConfig c = FastConfig(Regime::kDsef);
  c.pairing = data::Pairing::kShortLong;
  const nlohmann::json j = c;
  const TrainConfig back = j.get<TrainConfig>();
  CHECK(nlohmann::json(back) == j);
  nlohmann::json extra = j;
  extra["bogus"] = 1;
  CHECK_THROWS_AS(extra.get<TrainConfig>(), ConfigError);
  TrainConfig bad;
  bad.base_lr = 0;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = TrainConfig{};
  bad.phase1_epochs = 200;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
}

TEST_CASE("adam state survives an archive round trip") {
  SefPNet model(TinyConfig());
  ParameterStore params = model.InitParameters(1);
  Adam adam;
  NamedArrays grads;
  for (const auto& name : params.names()) {
    nn::Tensor g(params.Get(name).value().shape());
    for (double& v : g.values()) v = 0.01;
    grads.emplace_back(name, g);
  }
  adam.Step(params, grads, 1e-3);
  Adam restored;
  restored.Restore(adam.ToArchive(), params);
  CHECK(restored.steps() == 1);
  ParameterStore a = params.Clone(), b = params.Clone();
  adam.Step(a, grads, 1e-3);
  restored.Step(b, grads, 1e-3);
  for (const auto& name : a.names())
    CHECK(a.Get(name).value().storage() == b.Get(name).value().storage());
  CHECK_THROWS_AS(restored.Restore(adam.ToArchive(), ParameterStore{}), CheckpointError);
}

TEST_CASE("tied clues give an exactly zero consistency term") {
  TrainConfig c = FastConfig(Regime::kDsef);
  c.tie_clues = true;
  Trainer trainer(TinyConfig(), c, SmallData());
  for (int s = 0; s < 2; ++s) {
    const StepRecord r = trainer.Step();
    CHECK(r.loss.components.at("heit") == 0.0);
    CHECK(std::isfinite(r.loss.total));
  }
}

TEST_CASE("consistency weight zero leaves total equal to the two SI-SDR terms") {
  TrainConfig c = FastConfig(Regime::kDsef);
  c.lambda_heit = 0.0;
  Trainer trainer(TinyConfig(), c, SmallData());
  const StepRecord r = trainer.Step();
  CHECK(r.loss.components.at("heit") > 0.0);
  CHECK(r.loss.total == doctest::Approx(r.loss.components.at("sisdr_1") +
                                        r.loss.components.at("sisdr_2"))
                            .epsilon(1e-12));
}

TEST_CASE("usef batches carry both task tags and are logged") {
  const fs::path dir = TempDir("usef");
  Trainer trainer(TinyConfig(), FastConfig(Regime::kUsef), SmallData(), dir.string());
  trainer.Run(1);
  REQUIRE(trainer.records().size() == 2);
  std::ifstream log(dir / "train_log.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto tasks = j.at("tasks").get<std::vector<std::string>>();
    CHECK(std::count(tasks.begin(), tasks.end(), "PSE") == 1);
    CHECK(std::count(tasks.begin(), tasks.end(), "SE") == 1);
    CHECK(j.at("sisdr_2").is_null());
    CHECK(j.contains("grad_norm_pre_clip"));
    ++lines;
  }
  CHECK(lines == 2);
  CHECK(fs::exists(dir / "ckpt" / "epoch_1" / "params.bin"));
  CHECK(fs::exists(dir / "ckpt" / "epoch_1" / "optim.bin"));
  CHECK(BestCheckpointDir(dir.string()) == CheckpointDir(dir.string(), 1));
}

TEST_CASE("resume reproduces the uninterrupted trajectory") {
  const TrainData data = SmallData();
  const TrainConfig c = FastConfig(Regime::kSef);
  Trainer straight(TinyConfig(), c, data);
  straight.Run(2);

  const fs::path dir = TempDir("resume");
  {
    Trainer first(TinyConfig(), c, data, dir.string());
    first.Run(1);
  }
  Trainer resumed(TinyConfig(), c, data, dir.string());
  resumed.Resume(CheckpointDir(dir.string(), 1));
  CHECK(resumed.meta().epoch == 1);
  resumed.Run(1);
  REQUIRE(resumed.records().size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(resumed.records()[i].step == straight.records()[i + 2].step);
    CHECK(resumed.records()[i].loss.total == straight.records()[i + 2].loss.total);
  }
  for (const auto& name : straight.params().names())
    CHECK(straight.params().Get(name).value().storage() ==
          resumed.params().Get(name).value().storage());

  TrainConfig other = c;
  other.seed = 99;
  Trainer wrong(TinyConfig(), other, data);
  CHECK_THROWS_AS(wrong.Resume(CheckpointDir(dir.string(), 1)), CheckpointError);
}

TEST_CASE("passthrough evaluation reports the mixture SI-SDR") {
  const TrainData d = SmallData();
  const data::CorpusIndex index(d.corpus);
  SefPNet model(TinyConfig());
  std::vector<data::TrainingExample> test = d.pse_pool;
  test.insert(test.end(), d.se_pool.begin(), d.se_pool.end());
  EvalOptions o;
  o.seed = 4;
  const auto report = EvaluateCheckpoint(model.PassthroughParameters(), test, index, o);
  REQUIRE(report.items.size() == test.size());
  for (const auto& item : report.items)
    CHECK(std::abs(item.sisdr_db - *item.mixture_sisdr_db) < 0.01);
  CHECK(report.rows.size() == 2);
  CHECK_THROWS_AS(EvaluateCheckpoint(model.PassthroughParameters(), {}, index, o),
                  EmptyManifest);
}

TEST_CASE("short test enrollments stay within two seconds") {
  const TrainData d = SmallData();
  const data::CorpusIndex index(d.corpus);
  for (size_t i = 0; i < 20; ++i) {
    Rng rng = MakeRng(5, kStreamEval, i);
    const auto& ex = d.pse_pool[i % d.pse_pool.size()];
    const auto clue = data::SampleEnrollment(index, ex.target_speaker, ex.target_utt,
                                             data::EnrollPolicy::kShort, rng);
    CHECK(clue.wave.duration_s() <= 2.0);
  }
}
