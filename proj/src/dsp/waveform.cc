// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/dsp/waveform.h"

#include <cmath>

#include "pse/error.h"

namespace pse {

void Waveform::Validate(const std::string& what) const {
  if (sample_rate <= 0)
    throw InvalidInput(what + ": sample rate must be positive");
  for (double v : samples)
    if (!std::isfinite(v)) throw InvalidInput(what + ": non-finite sample");
}

double Energy(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

double MeanPower(const std::vector<double>& x) {
  return x.empty() ? 0.0 : Energy(x) / static_cast<double>(x.size());
}

}  // namespace pse
