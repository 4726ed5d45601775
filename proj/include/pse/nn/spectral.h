// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Bridges between complex spectrograms and [2, frames, bins] tensors, plus
// the differentiable spectral ops on the model's output path.

#pragma once

#include "pse/dsp/stft.h"
#include "pse/nn/var.h"

namespace pse::nn {

// Plane 0 holds real parts, plane 1 imaginary parts.
Tensor SpecToTensor(const ComplexSpectrogram& spec);
ComplexSpectrogram TensorToSpec(const Tensor& t, const StftParams& params,
                                int sample_rate, bool compressed);

// Power-law magnitude expansion m -> m^(1/exponent), phase preserved.
// Forward values match DrcExpand exactly; the backward pass adds eps to
// magnitudes it divides by.
Var DrcExpandOp(const Var& spec, double exponent, double eps = 1e-8);

// Inverse STFT of an uncompressed [2, frames, bins] spectrogram to a rank-1
// waveform of target_length samples.
Var IstftOp(const Var& spec, const StftEngine& engine, size_t target_length);

}  // namespace pse::nn
