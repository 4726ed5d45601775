#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "oracles/dft_reference.h"
#include "pse/dsp/drc.h"
#include "pse/dsp/fft.h"
#include "pse/dsp/resample.h"
#include "pse/dsp/stft.h"
#include "pse/dsp/wav_io.h"
#include "pse/error.h"
#include "pse/rng.h"

using namespace pse;
namespace fs = std::filesystem;

namespace {

std::vector<double> RandomSignal(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = 0.1 * StandardNormal(rng);
  return x;
}

double RelativeError(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("real FFT matches the naive DFT and inverts") {
  for (int n : {8, 64, 256, 250}) {
    const auto x = RandomSignal(n, n);
    const RealFft fft(n);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    fft.Forward(x, spec);
    const auto want = oracle::NaiveDft(x);
    for (int k = 0; k <= n / 2; ++k) CHECK(std::abs(spec[k] - want[k]) < 1e-10);
    std::vector<double> back(n);
    fft.Inverse(spec, back);
    for (int i = 0; i < n; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
  }
}

TEST_CASE("stft frames match the loop oracle") {
  const Waveform w(RandomSignal(1000, 1), 8000);
  const StftParams p = DefaultStftParams(8000);
  CHECK(p.WindowSamples(8000) == 256);
  CHECK(p.HopSamples(8000) == 128);
  const ComplexSpectrogram spec = Stft(w, p);
  CHECK(spec.frames == 1 + 1000 / 128);
  CHECK(spec.bins == 129);
  for (int t : {0, 3, spec.frames - 1}) {
    const auto want = oracle::StftFrame(w.samples, 256, 128, t);
    for (int k = 0; k < spec.bins; ++k) CHECK(std::abs(spec.at(t, k) - want[k]) < 1e-10);
  }
}

TEST_CASE("stft round trip is near-perfect") {
  const StftParams p = DefaultStftParams(8000);
  for (size_t n : {8000u, 7777u, 300u}) {
    const Waveform w(RandomSignal(n, n), 8000);
    const Waveform back = Istft(Stft(w, p), n);
    REQUIRE(back.size() == n);
    CHECK(RelativeError(back.samples, w.samples) < 1e-9);
  }
  StftParams hamming = p;
  hamming.window = WindowKind::kHamming;
  const Waveform w(RandomSignal(4000, 9), 8000);
  CHECK(RelativeError(Istft(Stft(w, hamming), 4000).samples, w.samples) < 1e-9);
}

TEST_CASE("synthesis adjoint satisfies the dot-product test") {
  const StftEngine engine(DefaultStftParams(8000), 8000);
  const int frames = engine.NumFrames(2000);
  Rng rng(4);
  std::vector<Complex> spec(static_cast<size_t>(frames) * engine.bins());
  for (auto& z : spec) z = {StandardNormal(rng), StandardNormal(rng)};
  for (int t = 0; t < frames; ++t) {
    // DC and Nyquist bins carry no imaginary part after a real transform.
    spec[t * engine.bins()].imag(0.0);
    spec[t * engine.bins() + engine.bins() - 1].imag(0.0);
  }
  const auto y = engine.Synthesize(spec, frames, 2000);
  const auto g = RandomSignal(2000, 5);
  const auto adj = engine.SynthesizeAdjoint(g, frames);
  double lhs = 0, rhs = 0;
  for (size_t i = 0; i < y.size(); ++i) lhs += y[i] * g[i];
  for (size_t i = 0; i < spec.size(); ++i)
    rhs += spec[i].real() * adj[i].real() + spec[i].imag() * adj[i].imag();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("stft parameter validation") {
  StftParams p = DefaultStftParams(8000);
  p.hop_ms = 40;
  CHECK_THROWS_AS(p.Validate(8000), InvalidParams);
  p = DefaultStftParams(8000);
  p.fft_size = 128;
  CHECK_THROWS_AS(p.Validate(8000), InvalidParams);
  CHECK_THROWS_AS(Stft(Waveform({}, 8000), DefaultStftParams(8000)), InvalidInput);
  CHECK(DefaultStftParams(16000).fft_size == 512);
}

TEST_CASE("dynamic range compression") {
  const Waveform w(RandomSignal(2000, 2), 8000);
  const ComplexSpectrogram spec = Stft(w, DefaultStftParams(8000));
  const ComplexSpectrogram c = DrcCompress(spec, 0.5);
  CHECK(c.compressed);
  for (size_t i = 0; i < spec.data.size(); i += 7) {
    CHECK(std::abs(c.data[i]) == doctest::Approx(std::sqrt(std::abs(spec.data[i]))));
    if (std::abs(spec.data[i]) > 1e-12)
      CHECK(std::arg(c.data[i]) == doctest::Approx(std::arg(spec.data[i])));
  }
  const ComplexSpectrogram back = DrcExpand(c, 0.5);
  for (size_t i = 0; i < spec.data.size(); ++i)
    CHECK(std::abs(back.data[i] - spec.data[i]) < 1e-9);
  CHECK(CompressValue(0.0, 0.5) == Complex(0.0));
  CHECK_THROWS_AS(DrcCompress(c, 0.5), InvalidState);
  CHECK_THROWS_AS(DrcExpand(spec, 0.5), InvalidState);
  CHECK_THROWS_AS(DrcCompress(spec, 0.0), InvalidParams);
  CHECK_THROWS_AS(Istft(c, 2000), InvalidState);
}

TEST_CASE("resampling keeps in-band tones") {
  std::vector<double> x(16000);
  for (size_t i = 0; i < x.size(); ++i)
    x[i] = 0.5 * std::sin(2 * std::numbers::pi * 1000.0 * i / 16000.0);
  const Waveform down = Resample(Waveform(x, 16000), 8000);
  CHECK(down.sample_rate == 8000);
  CHECK(down.size() == 8000);
  double err = 0;
  for (size_t i = 200; i < 7800; ++i)
    err = std::max(err, std::abs(down.samples[i] -
                                 0.5 * std::sin(2 * std::numbers::pi * 1000.0 * i / 8000.0)));
  CHECK(err < 1e-3);
  const Waveform same = Resample(down, 8000);
  CHECK(same.samples == down.samples);
}

TEST_CASE("wav round trip and errors") {
  const fs::path path = fs::temp_directory_path() / "pse_test_dsp.wav";
  const Waveform w(RandomSignal(1234, 3), 8000);
  WriteWav(path.string(), w);
  const Waveform back = ReadWav(path.string());
  CHECK(back.sample_rate == 8000);
  REQUIRE(back.size() == w.size());
  for (size_t i = 0; i < w.size(); ++i)
    CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0 / 32768);
  CHECK_THROWS_WITH_AS(ReadWav("/nonexistent/x.wav"), doctest::Contains("/nonexistent/x.wav"),
                       IOError);
  std::ofstream(path, std::ios::trunc) << "RIFF....WAVEjunk";
  CHECK_THROWS_AS(ReadWav(path.string()), IOError);
}
