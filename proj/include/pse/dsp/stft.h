// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "pse/dsp/waveform.h"

namespace pse {

using Complex = std::complex<double>;

enum class WindowKind { kHann, kHamming, kRect };

std::string WindowKindName(WindowKind kind);
WindowKind ParseWindowKind(const std::string& name);

struct StftParams {
  double window_ms = 32.0;
  double hop_ms = 16.0;
  int fft_size = 256;
  WindowKind window = WindowKind::kHann;

  int WindowSamples(int sample_rate) const;
  int HopSamples(int sample_rate) const;
  int num_bins() const { return fft_size / 2 + 1; }

  // Throws InvalidParams unless hop <= window <= fft_size, fft_size is even
  // and the periodic window satisfies constant overlap-add at this hop.
  void Validate(int sample_rate) const;

  bool operator==(const StftParams&) const = default;
};

// 32 ms periodic Hann at 50% overlap with the next power of two FFT.
StftParams DefaultStftParams(int sample_rate);

// Periodic window of length n.
std::vector<double> MakeWindow(WindowKind kind, int n);

struct ComplexSpectrogram {
  int frames = 0;
  int bins = 0;
  std::vector<Complex> data;  // row-major [frames, bins]
  StftParams params;
  int sample_rate = 8000;
  bool compressed = false;

  Complex& at(int t, int k) { return data[static_cast<size_t>(t) * bins + k]; }
  const Complex& at(int t, int k) const {
    return data[static_cast<size_t>(t) * bins + k];
  }
};

// Analysis/synthesis pair for one (params, rate). Analysis reflect-pads
// half a window on both sides and yields 1 + floor(n / hop) frames.
// Synthesis is weighted overlap-add normalized by the summed squared window.
class StftEngine {
 public:
  StftEngine(const StftParams& params, int sample_rate);

  int window() const { return win_len_; }
  int hop() const { return hop_; }
  int fft_size() const { return params_.fft_size; }
  int bins() const { return params_.num_bins(); }
  int NumFrames(size_t num_samples) const;

  // frames x bins, row-major.
  std::vector<Complex> Analyze(std::span<const double> x) const;
  std::vector<double> Synthesize(std::span<const Complex> spec, int frames,
                                 size_t target_length) const;
  // Gradient of Synthesize w.r.t. the real and imaginary parts of every
  // bin, given the gradient of its output. Returned as complex numbers
  // holding (d/dRe, d/dIm).
  std::vector<Complex> SynthesizeAdjoint(std::span<const double> grad_out,
                                         int frames) const;

 private:
  std::vector<double> Envelope(int frames) const;

  StftParams params_;
  int sample_rate_;
  int win_len_;
  int hop_;
  std::vector<double> window_;
};

// Errors: InvalidInput on empty input, InvalidParams on bad params.
ComplexSpectrogram Stft(const Waveform& wave, const StftParams& params);
// Errors: InvalidState when spec is still compressed.
Waveform Istft(const ComplexSpectrogram& spec, size_t target_length);

}  // namespace pse
