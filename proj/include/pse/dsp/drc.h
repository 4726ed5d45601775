// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "pse/dsp/stft.h"

namespace pse {

// Power-law magnitude compression, phase preserved; |0| stays 0.
Complex CompressValue(Complex z, double exponent);
Complex ExpandValue(Complex z, double exponent);

// Errors: InvalidState on double compression, InvalidParams when exponent
// is outside (0, 1].
ComplexSpectrogram DrcCompress(const ComplexSpectrogram& spec, double exponent);
// Errors: InvalidState on an uncompressed spectrogram.
ComplexSpectrogram DrcExpand(const ComplexSpectrogram& spec, double exponent);

}  // namespace pse
