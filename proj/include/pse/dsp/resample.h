// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "pse/dsp/waveform.h"

namespace pse {

// Band-limited rate conversion with a polyphase Kaiser-windowed sinc
// (32 taps per side at the lower rate). Output length is
// round(n * target_rate / sample_rate); same-rate input is returned as is.
Waveform Resample(const Waveform& wave, int target_rate);

}  // namespace pse
