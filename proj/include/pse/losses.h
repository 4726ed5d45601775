// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Training objectives. Every loss has a plain form over signals and a
// differentiable form over nn::Var; both share one implementation.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "pse/dsp/stft.h"
#include "pse/dsp/waveform.h"
#include "pse/nn/var.h"

namespace pse::losses {

struct SiSdrOptions {
  bool subtract_mean = true;
  double eps = 1e-8;
};

// -SI-SDR in dB. alpha = <est, ref> / (|ref|^2 + eps),
// SI-SDR = 10 log10(|alpha ref|^2 / (|est - alpha ref|^2 + eps)).
// Errors: ShapeError on length mismatch or length < 2, InvalidReference on
// an all-zero reference.
double NegSiSdr(std::span<const double> est, std::span<const double> ref,
                const SiSdrOptions& opt = {});
double NegSiSdr(const Waveform& est, const Waveform& ref,
                const SiSdrOptions& opt = {});
// est is a rank-1 Var; ref is constant.
nn::Var NegSiSdr(const nn::Var& est, std::span<const double> ref,
                 const SiSdrOptions& opt = {});

// How the HEIT L1 distance treats complex values.
enum class HeitNorm {
  kRealImag,  // mean |.| over real and imaginary parts as two channels
  kModulus,   // mean complex modulus |a - b| over (frame, bin)
};

std::string HeitNormName(HeitNorm norm);
HeitNorm ParseHeitNorm(const std::string& name);

// Errors: ShapeError on mismatched shapes or STFT parameters.
double HeitLoss(const ComplexSpectrogram& a, const ComplexSpectrogram& b,
                HeitNorm norm = HeitNorm::kRealImag);
// a, b: [2, frames, bins] holding real and imaginary planes.
nn::Var HeitLoss(const nn::Var& a, const nn::Var& b,
                 HeitNorm norm = HeitNorm::kRealImag);

struct LossValue {
  double total = 0.0;
  std::map<std::string, double> components;  // sisdr_1, sisdr_2, heit

  double component(const std::string& name) const;
};

// Mean reduction of totals and of every component.
LossValue BatchMean(const std::vector<LossValue>& items);

LossValue UsefLoss(const Waveform& est, const Waveform& ref);

struct EnhancedOutput {
  Waveform wave;
  ComplexSpectrogram spec;
};

// total = -SISDR(y1) + -SISDR(y2) + lambda * HEIT(y1.spec, y2.spec).
// The long/short pairing uses the same combination with (short, long).
LossValue DsefLoss(const EnhancedOutput& y1, const EnhancedOutput& y2,
                   const Waveform& ref, double lambda,
                   HeitNorm norm = HeitNorm::kRealImag);

// Differentiable loss together with its reported value.
struct GradLoss {
  nn::Var total;
  LossValue value;
};

GradLoss UsefLoss(const nn::Var& est, std::span<const double> ref);
GradLoss DsefLoss(const nn::Var& wave1, const nn::Var& spec1,
                  const nn::Var& wave2, const nn::Var& spec2,
                  std::span<const double> ref, double lambda,
                  HeitNorm norm = HeitNorm::kRealImag);

}  // namespace pse::losses
