// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/model/sefpnet.h"

#include <cmath>

#include "pse/dsp/drc.h"
#include "pse/error.h"
#include "pse/nn/spectral.h"
#include "pse/rng.h"

namespace pse {

namespace {

void CheckFinite(const nn::Var& v, const std::string& where) {
  if (!v.value().AllFinite())
    throw NumericalError(where, "non-finite activation");
}

// [C, T, F] <-> [T, C*F] per-frame vectors.
nn::Var FramesAsRows(const nn::Var& x) {
  const int64_t C = x.dim(0), T = x.dim(1), F = x.dim(2);
  return nn::Reshape(nn::Permute3(x, {1, 0, 2}), {T, C * F});
}

nn::Var RowsAsFrames(const nn::Var& x, int64_t C, int64_t F) {
  const int64_t T = x.dim(0);
  return nn::Permute3(nn::Reshape(x, {T, C, F}), {1, 0, 2});
}

std::vector<EncoderKind> Layout(int blocks) {
  std::vector<EncoderKind> kinds;
  if (blocks < 1) return kinds;
  kinds.push_back(EncoderKind::kDense);
  const int rest = blocks - 1;
  const int dense_encoders = (rest + 1) / 2;
  for (int i = 0; i < dense_encoders; ++i)
    kinds.push_back(EncoderKind::kDenseEncoder);
  for (int i = dense_encoders; i < rest; ++i) kinds.push_back(EncoderKind::kConv);
  return kinds;
}

nn::ConvOptions Same3x3() {
  nn::ConvOptions o;
  o.padding = {1, 1};
  return o;
}

nn::ConvOptions Down3x3() {
  nn::ConvOptions o;
  o.stride = {1, 2};
  o.padding = {1, 1};
  return o;
}

}  // namespace

SefPNet::SefPNet(ModelConfig config)
    : config_((config.Validate(), std::move(config))),
      stft_(config_.stft, config_.sample_rate) {
  const int64_t C = config_.base_channels;
  const int64_t F = stft_.bins();
  kinds_ = Layout(config_.num_encoder_blocks);

  isa_width_ = std::max<int64_t>(
      1, static_cast<int64_t>(std::ceil(2.0 * F * config_.isa_channel_factor)));
  ifi_gate_ = {"isa.ifi.gate", 4, 2, 1, 1, {}, true};
  ifi_update_ = {"isa.ifi.update", 4, 2, 1, 1, {}, false};

  int64_t bins = F;
  for (size_t i = 0; i < kinds_.size(); ++i) {
    const std::string name = "encoder." + std::to_string(i);
    EncoderBlock block;
    block.kind = kinds_[i];
    switch (block.kind) {
      case EncoderKind::kDense:
        block.dense = DenseBlock(name + ".dense", i == 0 ? 4 : C, C);
        break;
      case EncoderKind::kDenseEncoder:
        block.dense = DenseBlock(name + ".dense", C, C);
        block.down = Conv2dBlock(name + ".down", C, C, {3, 3}, Down3x3());
        bins = nn::ConvOutSize(bins, 3, 2, 1, 1);
        break;
      case EncoderKind::kConv:
        block.down = Conv2dBlock(name + ".down", C, C, {3, 3}, Down3x3());
        bins = nn::ConvOutSize(bins, 3, 2, 1, 1);
        break;
    }
    block.lca = LcaModule(name + ".lca", C, config_.lca_channel_factor);
    encoders_.push_back(std::move(block));
    stage_bins_.push_back(bins);
  }

  tcn_channels_ = C * bins;
  tcn_hidden_ = 2 * C;
  for (int l = 0; l < config_.tcn_layers; ++l)
    for (int b = 0; b < config_.tcn_blocks_per_layer; ++b)
      tcn_.emplace_back("tcn." + std::to_string(l) + "." + std::to_string(b),
                        tcn_channels_, tcn_hidden_, int64_t{1} << b);

  pyramid_ = PyramidBlock("pyramid", C);

  const int n = static_cast<int>(kinds_.size());
  for (int j = 0; j < n; ++j) {
    const std::string name = "decoder." + std::to_string(j);
    DecoderBlock block;
    block.mirror = kinds_[n - 1 - j];
    switch (block.mirror) {
      case EncoderKind::kConv:
        block.up = Deconv2dBlock(name + ".up", 2 * C, C);
        break;
      case EncoderKind::kDenseEncoder:
        block.dense = DenseBlock(name + ".dense", 2 * C, C);
        block.up = Deconv2dBlock(name + ".up", C, C);
        break;
      case EncoderKind::kDense:
        block.dense = DenseBlock(name + ".dense", 2 * C, C);
        break;
    }
    decoders_.push_back(std::move(block));
  }
  head_ = {"head.conv", C, 2, 3, 3, Same3x3(), false};
}

ParamSpecs SefPNet::ParameterSpecs() const {
  ParamSpecs specs;
  const int64_t D = 2 * stft_.bins();
  const int64_t W = isa_width_;
  for (const char* proj : {"query", "key", "value"}) {
    const std::string base = std::string("isa.ci.") + proj;
    specs.push_back({base + ".weight", {D, W}, InitKind::kFanInUniform,
                     static_cast<double>(D)});
    specs.push_back({base + ".bias", {W}, InitKind::kFanInUniform,
                     static_cast<double>(D)});
  }
  specs.push_back({"isa.ci.restore.weight", {W, D}, InitKind::kFanInUniform,
                   static_cast<double>(W)});
  specs.push_back({"isa.ci.restore.bias", {D}, InitKind::kFanInUniform,
                   static_cast<double>(W)});
  ifi_gate_.Declare(specs);
  ifi_update_.Declare(specs);

  for (const auto& block : encoders_) {
    if (block.kind != EncoderKind::kConv) block.dense.Declare(specs);
    if (block.kind != EncoderKind::kDense) block.down.Declare(specs);
    block.lca.Declare(specs);
  }
  for (const auto& t : tcn_) t.Declare(specs);
  pyramid_.Declare(specs);
  for (const auto& block : decoders_) {
    if (block.mirror != EncoderKind::kConv) block.dense.Declare(specs);
    if (block.mirror != EncoderKind::kDense) block.up.Declare(specs);
  }
  head_.Declare(specs);
  specs.push_back({"head.input_gain", {2}, InitKind::kZeros, 0.0});
  return specs;
}

ParameterStore SefPNet::InitParameters(uint64_t seed) const {
  ParameterStore store;
  store.config = config_;
  store.seed = seed;
  Rng rng = MakeRng(seed, kStreamInit);
  for (const ParamSpec& spec : ParameterSpecs()) {
    nn::Tensor t(spec.shape);
    switch (spec.init) {
      case InitKind::kFanInUniform: {
        const double bound = 1.0 / std::sqrt(spec.value);
        for (double& v : t.values()) v = UniformReal(rng, -bound, bound);
        break;
      }
      case InitKind::kZeros: break;
      case InitKind::kOnes: t.Fill(1.0); break;
      case InitKind::kConstant: t.Fill(spec.value); break;
    }
    store.Add(spec.name, std::move(t));
  }
  return store;
}

ParameterStore SefPNet::PassthroughParameters() const {
  ParameterStore store = InitParameters(0);
  store.MutableValue(head_.name + ".weight").Fill(0.0);
  store.MutableValue(head_.name + ".bias").Fill(0.0);
  store.MutableValue("head.input_gain").Fill(1.0);
  return store;
}

void SefPNet::SetUnitGates(ParameterStore& params, int encoder_block) const {
  encoders_.at(encoder_block).lca.SetUnitGates(params);
}

void SefPNet::CheckShapes(const ParameterStore& params) const {
  for (const ParamSpec& spec : ParameterSpecs()) {
    if (!params.Has(spec.name))
      throw InvalidInput("parameter store lacks '" + spec.name + "'");
    if (params.Get(spec.name).shape() != spec.shape)
      throw ShapeError("parameter '" + spec.name + "' has shape " +
                       nn::ShapeToString(params.Get(spec.name).shape()) +
                       ", expected " + nn::ShapeToString(spec.shape));
  }
}

nn::Var SefPNet::CompressedFeatures(const Waveform& wave) const {
  if (wave.sample_rate != config_.sample_rate)
    throw InvalidInput("expected " + std::to_string(config_.sample_rate) +
                       " Hz audio, got " + std::to_string(wave.sample_rate));
  ComplexSpectrogram spec = Stft(wave, config_.stft);
  return nn::Var(nn::SpecToTensor(DrcCompress(spec, config_.drc_exponent)));
}

nn::Var SefPNet::ContextInteraction(const nn::Var& mix_feat,
                                    const nn::Var& enroll_feat,
                                    const ParameterStore& params) const {
  if (mix_feat.value().rank() != 3 || enroll_feat.value().rank() != 3 ||
      mix_feat.dim(0) != enroll_feat.dim(0) ||
      mix_feat.dim(2) != enroll_feat.dim(2))
    throw ShapeError("context interaction: mixture " +
                     nn::ShapeToString(mix_feat.shape()) + " vs enrollment " +
                     nn::ShapeToString(enroll_feat.shape()));
  const int64_t C = mix_feat.dim(0), F = mix_feat.dim(2);
  auto project = [&](const nn::Var& rows, const std::string& name) {
    return nn::AddRowBias(nn::MatMul(rows, params.Get(name + ".weight")),
                          params.Get(name + ".bias"));
  };
  const nn::Var mix_rows = FramesAsRows(mix_feat);
  const nn::Var enroll_rows = FramesAsRows(enroll_feat);
  const nn::Var attended = nn::CrossAttention(
      project(mix_rows, "isa.ci.query"), project(enroll_rows, "isa.ci.key"),
      project(enroll_rows, "isa.ci.value"));
  const nn::Var restored =
      RowsAsFrames(project(attended, "isa.ci.restore"), C, F);
  return nn::Add(mix_feat, restored);
}

nn::Var SefPNet::IterativeFeatureIntegration(
    const nn::Var& enroll_feat, const nn::Var& ci_out, int iterations,
    const ParameterStore& params) const {
  if (iterations < 1) throw InvalidInput("IFI needs at least one iteration");
  if (enroll_feat.value().rank() != 3 || ci_out.value().rank() != 3 ||
      enroll_feat.dim(0) != ci_out.dim(0) || enroll_feat.dim(2) != ci_out.dim(2))
    throw ShapeError("iterative feature integration: enrollment " +
                     nn::ShapeToString(enroll_feat.shape()) + " vs " +
                     nn::ShapeToString(ci_out.shape()));
  nn::Var e = nn::FrameMeanBroadcast(enroll_feat, ci_out.dim(1));
  for (int k = 0; k < iterations; ++k) {
    const nn::Var joint = nn::Concat({e, ci_out});
    e = nn::Add(e, nn::Mul(nn::Sigmoid(ifi_gate_(params, joint)),
                           ifi_update_(params, joint)));
  }
  return e;
}

nn::Var SefPNet::Lca(int encoder_block, const nn::Var& feat,
                     const ParameterStore& params) const {
  const LcaModule& lca = encoders_.at(encoder_block).lca;
  if (feat.value().rank() != 3 || feat.dim(0) != lca.channels)
    throw ShapeError("LCA expects " + std::to_string(lca.channels) +
                     " channels, got " + nn::ShapeToString(feat.shape()));
  return lca(params, feat);
}

SefPNet::Output SefPNet::Forward(const Waveform& mixture,
                                 const Waveform& enrollment,
                                 const ParameterStore& params) const {
  if (mixture.empty()) throw InvalidInput("forward: empty mixture");
  if (enrollment.empty()) throw InvalidInput("forward: empty enrollment");
  mixture.Validate("mixture");
  enrollment.Validate("enrollment");
  CheckShapes(params);

  const nn::Var mix = CompressedFeatures(mixture);
  const nn::Var enroll = CompressedFeatures(enrollment);
  const int64_t T = mix.dim(1);

  const nn::Var ci = ContextInteraction(mix, enroll, params);
  CheckFinite(ci, "isa.ci");
  const nn::Var e_ifi = IterativeFeatureIntegration(
      enroll, ci, config_.ifi_iterations, params);
  CheckFinite(e_ifi, "isa.ifi");

  nn::Var x = nn::Concat({mix, e_ifi});
  std::vector<nn::Var> skips;
  std::vector<int64_t> in_bins;
  for (size_t i = 0; i < encoders_.size(); ++i) {
    const EncoderBlock& block = encoders_[i];
    in_bins.push_back(x.dim(2));
    if (block.kind != EncoderKind::kConv) x = block.dense(params, x);
    if (block.kind != EncoderKind::kDense) x = block.down(params, x);
    x = block.lca(params, x);
    CheckFinite(x, "encoder." + std::to_string(i));
    skips.push_back(x);
  }

  if (!tcn_.empty()) {
    const int64_t C = x.dim(0), F = x.dim(2);
    nn::Var h = nn::Reshape(nn::Permute3(x, {0, 2, 1}), {C * F, T, 1});
    for (size_t i = 0; i < tcn_.size(); ++i) h = tcn_[i](params, h);
    x = nn::Permute3(nn::Reshape(h, {C, F, T}), {0, 2, 1});
    CheckFinite(x, "tcn");
  }
  x = pyramid_(params, x);
  CheckFinite(x, "pyramid");

  const size_t n = decoders_.size();
  for (size_t j = 0; j < n; ++j) {
    const DecoderBlock& block = decoders_[j];
    const size_t e = n - 1 - j;
    x = nn::Concat({x, skips[e]});
    if (block.mirror != EncoderKind::kConv) x = block.dense(params, x);
    if (block.mirror != EncoderKind::kDense)
      x = block.up(params, x, {T, in_bins[e]});
    CheckFinite(x, "decoder." + std::to_string(j));
  }

  Output out;
  out.spec = nn::Add(head_(params, x),
                     nn::MulChannel(mix, params.Get("head.input_gain")));
  CheckFinite(out.spec, "head");
  out.wave = nn::IstftOp(nn::DrcExpandOp(out.spec, config_.drc_exponent),
                         stft_, mixture.size());
  CheckFinite(out.wave, "synthesis");
  return out;
}

SefPNet::Output SefPNet::Forward(const Waveform& mixture,
                                 const EnrollmentClue& clue,
                                 const ParameterStore& params) const {
  return Forward(mixture, clue.waveform(), params);
}

Enhanced Enhance(const SefPNet& model, const Waveform& mixture,
                 const EnrollmentClue& clue, const ParameterStore& params) {
  nn::NoGradGuard no_grad;
  const SefPNet::Output out = model.Forward(mixture, clue, params);
  Enhanced e;
  e.wave = Waveform(out.wave.value().storage(), mixture.sample_rate);
  e.spec = nn::TensorToSpec(out.spec.value(), model.config().stft,
                            mixture.sample_rate, /*compressed=*/true);
  return e;
}

}  // namespace pse
