#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles/param_count.h"
#include "pse/error.h"
#include "pse/losses.h"
#include "pse/model/sefpnet.h"
#include "pse/nn/ops.h"
#include "pse/rng.h"

using namespace pse;

namespace {

Waveform Noise(size_t n, uint64_t seed, double rms = 0.1) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rms * StandardNormal(rng);
  return {x, 8000};
}

oracle::ArchSpec Arch(const ModelConfig& c) {
  return {c.stft.fft_size,      c.num_encoder_blocks, c.base_channels,
          c.isa_channel_factor, c.lca_channel_factor, c.tcn_layers,
          c.tcn_blocks_per_layer};
}

// Fast config for gradient work: 8 ms frames, 33 bins.
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

}  // namespace

TEST_CASE("encoder layout and stage bins") {
  SefPNet model(ModelConfig{});
  REQUIRE(model.encoder_kinds().size() == 7);
  CHECK(model.encoder_kinds()[0] == EncoderKind::kDense);
  CHECK(model.encoder_kinds()[3] == EncoderKind::kDenseEncoder);
  CHECK(model.encoder_kinds()[4] == EncoderKind::kConv);
  CHECK(model.stage_bins() == std::vector<int64_t>{129, 65, 33, 17, 9, 5, 3});
}

TEST_CASE("parameter count matches the shape-walking oracle") {
  for (const ModelConfig& c : {ToyModelConfig(), ModelConfig{}, TinyConfig()}) {
    SefPNet model(c);
    CHECK(CountParameters(model.InitParameters(1)) ==
          oracle::CountParameters(Arch(c)));
  }
  CHECK(CountParameters(ParameterStore{}) == 0);
  ParameterStore one;
  one.Add("w", nn::Tensor({3, 3}));
  CHECK(CountParameters(one) == 9);
}

TEST_CASE("forward keeps length and is deterministic") {
  SefPNet model(ToyModelConfig());
  const ParameterStore params = model.InitParameters(3);
  const Waveform mix = Noise(8000, 1);
  const EnrollmentClue clue = EnrollmentClue::Real(Noise(4000, 2), {"e"});
  Enhanced a = Enhance(model, mix, clue, params);
  Enhanced b = Enhance(model, mix, clue, params);
  CHECK(a.wave.size() == 8000);
  CHECK(a.wave.samples == b.wave.samples);
  CHECK(a.spec.frames == 1 + 8000 / 128);
  CHECK(a.spec.bins == 129);
}

TEST_CASE("zero placeholder equals an explicit zero enrollment") {
  SefPNet model(ToyModelConfig());
  const ParameterStore params = model.InitParameters(5);
  const Waveform mix = Noise(6000, 9);
  const auto placeholder = MakePlaceholder(PlaceholderMode::kZeros, 24000, 0);
  const auto explicit_zero =
      EnrollmentClue::Real(Waveform(std::vector<double>(3000, 0.0), 8000), {"z"});
  CHECK(Enhance(model, mix, placeholder, params).wave.samples ==
        Enhance(model, mix, explicit_zero, params).wave.samples);
}

TEST_CASE("passthrough parameters reproduce the mixture") {
  SefPNet model(ToyModelConfig());
  const Waveform mix = Noise(8000, 11);
  const auto out = Enhance(model, mix, MakePlaceholder(PlaceholderMode::kOnes, 800, 0),
                           model.PassthroughParameters());
  double err = 0, ref = 0;
  for (size_t i = 0; i < mix.size(); ++i) {
    err += std::pow(out.wave.samples[i] - mix.samples[i], 2);
    ref += mix.samples[i] * mix.samples[i];
  }
  CHECK(std::sqrt(err / ref) < 1e-9);
}

TEST_CASE("stage contracts") {
  SefPNet model(ToyModelConfig());
  ParameterStore params = model.InitParameters(2);
  nn::NoGradGuard guard;
  const nn::Var mix = model.CompressedFeatures(Noise(1600, 3));
  const nn::Var enroll = model.CompressedFeatures(Noise(640, 4));
  const nn::Var ci = model.ContextInteraction(mix, enroll, params);
  CHECK(ci.shape() == mix.shape());
  const nn::Var e1 = model.IterativeFeatureIntegration(enroll, ci, 1, params);
  const nn::Var e2 = model.IterativeFeatureIntegration(enroll, ci, 2, params);
  CHECK(e2.shape() == ci.shape());
  CHECK(e1.value().storage() != e2.value().storage());
  CHECK_THROWS_AS(model.IterativeFeatureIntegration(enroll, ci, 0, params),
                  InvalidInput);
  nn::Var bad(nn::Tensor({2, 3, 17}));
  CHECK_THROWS_AS(model.ContextInteraction(mix, bad, params), ShapeError);

  nn::Var feat(nn::Tensor({8, 5, 33}));
  std::mt19937_64 rng(1);
  for (double& v : feat.mutable_value().values())
    v = std::normal_distribution<>(0, 1)(rng);
  CHECK(model.Lca(1, feat, params).shape() == feat.shape());
  model.SetUnitGates(params, 1);
  CHECK(model.Lca(1, feat, params).value().storage() ==
        feat.value().storage());
}

TEST_CASE("rate mismatch and NaN input are rejected") {
  SefPNet model(ToyModelConfig());
  const ParameterStore params = model.InitParameters(1);
  Waveform mix = Noise(800, 1);
  mix.sample_rate = 16000;
  CHECK_THROWS_AS(model.Forward(mix, Noise(800, 2), params), InvalidInput);
  ParameterStore broken = params.Clone();
  broken.MutableValue("head.conv.bias")[0] = std::nan("");
  CHECK_THROWS_AS(model.Forward(Noise(800, 1), Noise(800, 2), broken),
                  NumericalError);
}

TEST_CASE("archive round trip and validation") {
  SefPNet model(ToyModelConfig());
  const ParameterStore params = model.InitParameters(4);
  const std::string path = "test_model_params.bin";
  SaveParameters(path, params);
  const ParameterStore back = LoadParameters(path);
  CHECK(back.config == params.config);
  CHECK(back.seed == 4);
  for (const auto& n : params.names())
    CHECK(back.Get(n).value().storage() == params.Get(n).value().storage());
  std::remove(path.c_str());
}

namespace {

double DsefObjective(const SefPNet& model, const ParameterStore& params,
                     const Waveform& mix, const Waveform& e1,
                     const Waveform& e2, const Waveform& ref) {
  const auto y1 = model.Forward(mix, e1, params);
  const auto y2 = model.Forward(mix, e2, params);
  return losses::DsefLoss(y1.wave, y1.spec, y2.wave, y2.spec, ref.samples, 1.0)
      .total.value()[0];
}

}  // namespace

TEST_CASE("DSEF loss gradients match central differences") {
  SefPNet model(TinyConfig());
  ParameterStore params = model.InitParameters(21);
  const Waveform mix = Noise(400, 1), ref = Noise(400, 2);
  const Waveform e1 = Noise(240, 3), e2 = Noise(320, 4);

  const auto y1 = model.Forward(mix, e1, params);
  const auto y2 = model.Forward(mix, e2, params);
  nn::Backward(losses::DsefLoss(y1.wave, y1.spec, y2.wave, y2.spec,
                                ref.samples, 1.0).total);

  Rng rng(99);
  const auto& names = params.names();
  double worst = 0;
  for (int probe = 0; probe < 20; ++probe) {
    const std::string& name = names[UniformInt(rng, 0, names.size() - 1)];
    nn::Tensor& value = params.MutableValue(name);
    const int64_t i = UniformInt(rng, 0, value.size() - 1);
    const double analytic =
        params.Get(name).grad().size() ? params.Get(name).grad()[i] : 0.0;
    const double keep = value[i];
    value[i] = keep + 1e-5;
    const double up = DsefObjective(model, params, mix, e1, e2, ref);
    value[i] = keep - 1e-5;
    const double down = DsefObjective(model, params, mix, e1, e2, ref);
    value[i] = keep;
    const double numeric = (up - down) / 2e-5;
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    worst = std::max(worst, rel);
  }
  CHECK(worst <= 1e-4);
  CHECK(CountParameters(params) <= 50000);
}
