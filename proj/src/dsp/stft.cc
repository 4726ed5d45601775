// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/dsp/stft.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pse/dsp/fft.h"
#include "pse/error.h"

namespace pse {

namespace {

// Minimum summed squared window for a sample to be reconstructed.
constexpr double kEnvelopeFloor = 1e-10;

size_t ReflectIndex(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<size_t>(i < n ? i : period - i);
}

}  // namespace

std::string WindowKindName(WindowKind kind) {
  switch (kind) {
    case WindowKind::kHann: return "hann";
    case WindowKind::kHamming: return "hamming";
    case WindowKind::kRect: return "rect";
  }
  return "unknown";
}

WindowKind ParseWindowKind(const std::string& name) {
  if (name == "hann") return WindowKind::kHann;
  if (name == "hamming") return WindowKind::kHamming;
  if (name == "rect") return WindowKind::kRect;
  throw InvalidParams("unknown window kind '" + name + "'");
}

int StftParams::WindowSamples(int sample_rate) const {
  return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
}

int StftParams::HopSamples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

std::vector<double> MakeWindow(WindowKind kind, int n) {
  std::vector<double> w(n, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    const double phase = two_pi * i / n;
    switch (kind) {
      case WindowKind::kHann: w[i] = 0.5 - 0.5 * std::cos(phase); break;
      case WindowKind::kHamming: w[i] = 0.54 - 0.46 * std::cos(phase); break;
      case WindowKind::kRect: break;
    }
  }
  return w;
}

void StftParams::Validate(int sample_rate) const {
  if (sample_rate <= 0) throw InvalidParams("sample rate must be positive");
  const int win = WindowSamples(sample_rate);
  const int hop = HopSamples(sample_rate);
  if (win < 1 || hop < 1) throw InvalidParams("window and hop must be >= 1 sample");
  if (hop_ms > window_ms || hop > win)
    throw InvalidParams("hop must not exceed the window");
  if (fft_size < win || fft_size % 2)
    throw InvalidParams("fft_size must be even and >= window length");
  // Constant overlap-add: the shifted windows sum to a constant.
  const auto w = MakeWindow(window, win);
  std::vector<double> acc(hop, 0.0);
  for (int i = 0; i < win; ++i) acc[i % hop] += w[i];
  const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
  if (*hi <= 0.0 || (*hi - *lo) > 1e-9 * *hi)
    throw InvalidParams("window/hop pair violates constant overlap-add");
}

StftParams DefaultStftParams(int sample_rate) {
  StftParams p;
  const int win = p.WindowSamples(sample_rate);
  int fft = 1;
  while (fft < win) fft <<= 1;
  p.fft_size = std::max(fft, 2);
  return p;
}

StftEngine::StftEngine(const StftParams& params, int sample_rate)
    : params_(params), sample_rate_(sample_rate) {
  params_.Validate(sample_rate);
  win_len_ = params_.WindowSamples(sample_rate);
  hop_ = params_.HopSamples(sample_rate);
  window_ = MakeWindow(params_.window, win_len_);
}

int StftEngine::NumFrames(size_t num_samples) const {
  return 1 + static_cast<int>(num_samples / hop_);
}

std::vector<Complex> StftEngine::Analyze(std::span<const double> x) const {
  if (x.empty()) throw InvalidInput("stft: empty waveform");
  const int64_t n = static_cast<int64_t>(x.size());
  const int64_t half = win_len_ / 2;
  const int frames = NumFrames(x.size());
  const int nbins = bins();
  const RealFft fft(params_.fft_size);

  std::vector<Complex> out(static_cast<size_t>(frames) * nbins);
  std::vector<double> buf(params_.fft_size);
  for (int t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < win_len_; ++i) {
      // Position in the padded signal minus the left pad.
      const int64_t p = static_cast<int64_t>(t) * hop_ + i - half;
      if (p >= n + half) break;
      buf[i] = window_[i] * x[ReflectIndex(p, n)];
    }
    fft.Forward(buf, std::span(out).subspan(static_cast<size_t>(t) * nbins, nbins));
  }
  return out;
}

std::vector<double> StftEngine::Envelope(int frames) const {
  const size_t len = static_cast<size_t>(frames - 1) * hop_ + win_len_;
  std::vector<double> env(len, 0.0);
  for (int t = 0; t < frames; ++t)
    for (int i = 0; i < win_len_; ++i)
      env[static_cast<size_t>(t) * hop_ + i] += window_[i] * window_[i];
  return env;
}

std::vector<double> StftEngine::Synthesize(std::span<const Complex> spec,
                                           int frames,
                                           size_t target_length) const {
  const int nbins = bins();
  if (frames < 1 || spec.size() != static_cast<size_t>(frames) * nbins)
    throw ShapeError("istft: spectrogram size does not match frame count");
  const RealFft fft(params_.fft_size);
  const size_t half = win_len_ / 2;
  const std::vector<double> env = Envelope(frames);
  std::vector<double> acc(env.size(), 0.0);
  std::vector<double> buf(params_.fft_size);
  for (int t = 0; t < frames; ++t) {
    fft.Inverse(spec.subspan(static_cast<size_t>(t) * nbins, nbins), buf);
    double* dst = acc.data() + static_cast<size_t>(t) * hop_;
    for (int i = 0; i < win_len_; ++i) dst[i] += window_[i] * buf[i];
  }
  std::vector<double> out(target_length, 0.0);
  for (size_t i = 0; i < target_length; ++i) {
    const size_t p = i + half;
    if (p < env.size() && env[p] > kEnvelopeFloor) out[i] = acc[p] / env[p];
  }
  return out;
}

std::vector<Complex> StftEngine::SynthesizeAdjoint(
    std::span<const double> grad_out, int frames) const {
  const int nbins = bins();
  const int n = params_.fft_size;
  const RealFft fft(n);
  const size_t half = win_len_ / 2;
  const std::vector<double> env = Envelope(frames);
  std::vector<double> gp(env.size(), 0.0);
  for (size_t i = 0; i < grad_out.size(); ++i) {
    const size_t p = i + half;
    if (p < env.size() && env[p] > kEnvelopeFloor) gp[p] = grad_out[i] / env[p];
  }
  std::vector<Complex> out(static_cast<size_t>(frames) * nbins);
  std::vector<double> buf(n);
  std::vector<Complex> bins_buf(nbins);
  for (int t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const double* src = gp.data() + static_cast<size_t>(t) * hop_;
    for (int i = 0; i < win_len_; ++i) buf[i] = src[i] * window_[i];
    fft.Forward(buf, bins_buf);
    Complex* dst = out.data() + static_cast<size_t>(t) * nbins;
    for (int k = 0; k < nbins; ++k) {
      if (k == 0 || k == n / 2) {
        dst[k] = Complex(bins_buf[k].real() / n, 0.0);
      } else {
        dst[k] = bins_buf[k] * (2.0 / n);
      }
    }
  }
  return out;
}

ComplexSpectrogram Stft(const Waveform& wave, const StftParams& params) {
  if (wave.empty()) throw InvalidInput("stft: empty waveform");
  wave.Validate();
  const StftEngine engine(params, wave.sample_rate);
  ComplexSpectrogram spec;
  spec.frames = engine.NumFrames(wave.size());
  spec.bins = engine.bins();
  spec.data = engine.Analyze(wave.samples);
  spec.params = params;
  spec.sample_rate = wave.sample_rate;
  spec.compressed = false;
  return spec;
}

Waveform Istft(const ComplexSpectrogram& spec, size_t target_length) {
  if (spec.compressed)
    throw InvalidState("istft: spectrogram is compressed; expand it first");
  const StftEngine engine(spec.params, spec.sample_rate);
  if (spec.bins != engine.bins())
    throw ShapeError("istft: bin count does not match fft size");
  return Waveform(engine.Synthesize(spec.data, spec.frames, target_length),
                  spec.sample_rate);
}

}  // namespace pse
