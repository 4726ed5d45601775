// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/dsp/resample.h"

#include <cmath>
#include <numbers>
#include <numeric>

#include "pse/error.h"

namespace pse {

namespace {

constexpr int kHalfTaps = 32;
constexpr double kKaiserBeta = 8.6;

double Sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double Kaiser(double x) {  // x in [-1, 1]
  if (std::abs(x) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - x * x)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

}  // namespace

Waveform Resample(const Waveform& wave, int target_rate) {
  if (target_rate <= 0) throw InvalidInput("resample: target rate must be positive");
  if (wave.sample_rate <= 0) throw InvalidInput("resample: bad source rate");
  if (target_rate == wave.sample_rate) return wave;

  const int64_t g = std::gcd(wave.sample_rate, target_rate);
  const int64_t up = target_rate / g;
  const int64_t down = wave.sample_rate / g;
  const double cutoff = std::min(1.0, static_cast<double>(up) / down);
  // Kernel support in input samples.
  const int64_t half = static_cast<int64_t>(std::ceil(kHalfTaps / cutoff));

  // One filter per output phase, normalized to unit DC gain.
  std::vector<std::vector<double>> phases(up);
  for (int64_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / up;
    auto& taps = phases[p];
    taps.resize(2 * half);
    double total = 0.0;
    for (int64_t k = -half + 1; k <= half; ++k) {
      const double tau = k - frac;
      const double h = cutoff * Sinc(cutoff * tau) * Kaiser(tau / half);
      taps[k + half - 1] = h;
      total += h;
    }
    for (double& h : taps) h /= total;
  }

  const int64_t n_in = static_cast<int64_t>(wave.size());
  const int64_t n_out = static_cast<int64_t>(std::llround(
      static_cast<double>(n_in) * target_rate / wave.sample_rate));
  std::vector<double> out(n_out, 0.0);
  for (int64_t n = 0; n < n_out; ++n) {
    const int64_t pos = n * down;
    const int64_t base = pos / up;
    const auto& taps = phases[pos % up];
    double acc = 0.0;
    for (int64_t k = -half + 1; k <= half; ++k) {
      const int64_t i = base + k;
      if (i < 0 || i >= n_in) continue;
      acc += taps[k + half - 1] * wave.samples[i];
    }
    out[n] = acc;
  }
  return Waveform(std::move(out), target_rate);
}

}  // namespace pse
