// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Speaker-embedding-free personalized enhancement backbone.
//
//   mixture ──STFT/DRC──┬──────────────────────────────┐
//                       │                              │ concat
//   enrollment ─STFT/DRC┴─ context interaction ─ IFI ──┘
//     ─ encoder blocks (each followed by LCA) ─ TCN ─ pyramid
//     ─ decoder blocks (with encoder skips) ─ complex output head
//
// The output head predicts the compressed complex spectrogram directly
// (plus a learned gain on the compressed input, zero at initialization).

#pragma once

#include <string>
#include <vector>

#include "pse/clue.h"
#include "pse/dsp/stft.h"
#include "pse/model/config.h"
#include "pse/model/layers.h"
#include "pse/model/params.h"

namespace pse {

class SefPNet {
 public:
  explicit SefPNet(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const StftEngine& stft() const { return stft_; }
  int bins() const { return stft_.bins(); }
  // Frequency extent after each encoder block.
  const std::vector<int64_t>& stage_bins() const { return stage_bins_; }
  const std::vector<EncoderKind>& encoder_kinds() const { return kinds_; }

  ParamSpecs ParameterSpecs() const;
  // Fan-in uniform weights, zero gate biases, fixed seed.
  ParameterStore InitParameters(uint64_t seed) const;
  // Output equals the compressed input: zero head, unit input gain.
  ParameterStore PassthroughParameters() const;
  void SetUnitGates(ParameterStore& params, int encoder_block) const;

  // [2, frames, bins] compressed spectrogram of a waveform.
  nn::Var CompressedFeatures(const Waveform& wave) const;

  struct Output {
    nn::Var wave;  // [num_samples]
    nn::Var spec;  // [2, frames, bins], compressed domain
  };

  // Errors: InvalidInput on a sample-rate mismatch or empty mixture,
  // NumericalError naming the first layer that produced NaN/Inf.
  Output Forward(const Waveform& mixture, const Waveform& enrollment,
                 const ParameterStore& params) const;
  Output Forward(const Waveform& mixture, const EnrollmentClue& clue,
                 const ParameterStore& params) const;

  // Stages, exposed for tests. mix/enroll are [C, T, F] feature maps.
  nn::Var ContextInteraction(const nn::Var& mix_feat,
                             const nn::Var& enroll_feat,
                             const ParameterStore& params) const;
  nn::Var IterativeFeatureIntegration(const nn::Var& enroll_feat,
                                      const nn::Var& ci_out, int iterations,
                                      const ParameterStore& params) const;
  nn::Var Lca(int encoder_block, const nn::Var& feat,
              const ParameterStore& params) const;

 private:
  struct EncoderBlock {
    EncoderKind kind;
    DenseBlock dense;
    Conv2dBlock down;
    LcaModule lca;
  };
  struct DecoderBlock {
    EncoderKind mirror;
    DenseBlock dense;
    Deconv2dBlock up;
  };

  void CheckShapes(const ParameterStore& params) const;

  ModelConfig config_;
  StftEngine stft_;
  std::vector<EncoderKind> kinds_;
  std::vector<int64_t> stage_bins_;
  int64_t isa_width_ = 0;
  int64_t tcn_channels_ = 0;
  int64_t tcn_hidden_ = 0;

  Conv2dLayer ifi_gate_, ifi_update_;
  std::vector<EncoderBlock> encoders_;
  std::vector<TcnBlock> tcn_;
  PyramidBlock pyramid_;
  std::vector<DecoderBlock> decoders_;
  Conv2dLayer head_;
};

// Plain inference: enhanced waveform and compressed output spectrogram.
struct Enhanced {
  Waveform wave;
  ComplexSpectrogram spec;
};
Enhanced Enhance(const SefPNet& model, const Waveform& mixture,
                 const EnrollmentClue& clue, const ParameterStore& params);

}  // namespace pse
