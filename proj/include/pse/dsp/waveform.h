// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

namespace pse {

// Mono audio, samples normalized to [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 8000;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate)
      : samples(std::move(s)), sample_rate(rate) {}

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  // Throws InvalidInput on a non-positive rate or non-finite samples.
  void Validate(const std::string& what = "waveform") const;
};

double Energy(const std::vector<double>& x);
double MeanPower(const std::vector<double>& x);

}  // namespace pse
