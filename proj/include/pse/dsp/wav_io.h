// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include "pse/dsp/waveform.h"

namespace pse {

// Mono 16-bit PCM RIFF/WAVE. Samples map to [-1, 1) by 1/32768.
// Errors: IOError on unreadable, non-mono or non-16-bit files.
Waveform ReadWav(const std::string& path);
void WriteWav(const std::string& path, const Waveform& wave);

}  // namespace pse
