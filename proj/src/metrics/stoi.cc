// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Short-time objective intelligibility after Taal et al. (2011), matching
// the widely used reference implementation's frame and band layout.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "pse/dsp/fft.h"
#include "pse/dsp/resample.h"
#include "pse/error.h"
#include "pse/metrics/metrics.h"

namespace pse::metrics {

namespace {

// Procedure constants.
constexpr int kRate = 10000;         // analysis sample rate, Hz
constexpr int kFrame = 256;          // frame length, samples
constexpr int kHop = kFrame / 2;
constexpr int kFft = 512;
constexpr int kBands = 15;           // one-third octave bands
constexpr double kLowestBandHz = 150.0;
constexpr int kSegment = 30;         // frames per intermediate segment
constexpr double kClipDb = -15.0;    // lower SDR bound
constexpr double kDynamicRangeDb = 40.0;  // silent-frame threshold
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann without its zero end points.
std::vector<double> Window() {
  std::vector<double> w(kFrame);
  for (int i = 0; i < kFrame; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (kFrame + 1));
  return w;
}

std::vector<size_t> FrameStarts(size_t n) {
  std::vector<size_t> starts;
  for (size_t i = 0; i + kFrame < n; i += kHop) starts.push_back(i);
  return starts;
}

// Drops frames of both signals more than kDynamicRangeDb below the
// loudest reference frame and overlap-adds the rest.
void RemoveSilentFrames(std::vector<double>& ref, std::vector<double>& est) {
  const auto w = Window();
  const auto starts = FrameStarts(ref.size());
  std::vector<double> energy_db(starts.size());
  for (size_t f = 0; f < starts.size(); ++f) {
    double e = 0.0;
    for (int i = 0; i < kFrame; ++i) e += std::pow(w[i] * ref[starts[f] + i], 2);
    energy_db[f] = 20.0 * std::log10(std::sqrt(e) + kEps);
  }
  const double loudest =
      energy_db.empty() ? 0.0 : *std::max_element(energy_db.begin(), energy_db.end());
  std::vector<size_t> kept;
  for (size_t f = 0; f < starts.size(); ++f)
    if (energy_db[f] > loudest - kDynamicRangeDb) kept.push_back(starts[f]);

  const size_t n = kept.empty() ? 0 : (kept.size() - 1) * kHop + kFrame;
  std::vector<double> r(n, 0.0), e(n, 0.0);
  for (size_t k = 0; k < kept.size(); ++k)
    for (int i = 0; i < kFrame; ++i) {
      r[k * kHop + i] += w[i] * ref[kept[k] + i];
      e[k * kHop + i] += w[i] * est[kept[k] + i];
    }
  ref = std::move(r);
  est = std::move(e);
}

// Band index ranges [lo, hi) over the kFft / 2 + 1 bins.
std::vector<std::pair<int, int>> ThirdOctaveBands() {
  const int bins = kFft / 2 + 1;
  auto nearest = [&](double hz) {
    int best = 0;
    for (int k = 1; k < bins; ++k)
      if (std::abs(k * double(kRate) / kFft - hz) <
          std::abs(best * double(kRate) / kFft - hz))
        best = k;
    return best;
  };
  std::vector<std::pair<int, int>> bands;
  for (int b = 0; b < kBands; ++b)
    bands.emplace_back(nearest(kLowestBandHz * std::pow(2.0, (2.0 * b - 1) / 6)),
                       nearest(kLowestBandHz * std::pow(2.0, (2.0 * b + 1) / 6)));
  return bands;
}

// [bands][frames] band envelopes.
std::vector<std::vector<double>> BandEnvelopes(const std::vector<double>& x) {
  static const auto bands = ThirdOctaveBands();
  const auto w = Window();
  const auto starts = FrameStarts(x.size());
  RealFft fft(kFft);
  std::vector<double> frame(kFft);
  std::vector<std::complex<double>> spec(kFft / 2 + 1);
  std::vector<std::vector<double>> env(kBands, std::vector<double>(starts.size()));
  for (size_t f = 0; f < starts.size(); ++f) {
    std::fill(frame.begin(), frame.end(), 0.0);
    for (int i = 0; i < kFrame; ++i) frame[i] = w[i] * x[starts[f] + i];
    fft.Forward(frame, spec);
    for (int b = 0; b < kBands; ++b) {
      double power = 0.0;
      for (int k = bands[b].first; k < bands[b].second; ++k) power += std::norm(spec[k]);
      env[b][f] = std::sqrt(power);
    }
  }
  return env;
}

double Norm(const double* x, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

}  // namespace

double Stoi(const Waveform& est_in, const Waveform& ref_in) {
  if (est_in.size() != ref_in.size())
    throw ShapeError("stoi: length mismatch " + std::to_string(est_in.size()) +
                     " vs " + std::to_string(ref_in.size()));
  if (est_in.sample_rate != ref_in.sample_rate)
    throw ShapeError("stoi: sample rates differ");
  std::vector<double> ref = Resample(ref_in, kRate).samples;
  std::vector<double> est = Resample(est_in, kRate).samples;
  RemoveSilentFrames(ref, est);

  const auto x = BandEnvelopes(ref);
  const auto y = BandEnvelopes(est);
  const int frames = static_cast<int>(x[0].size());
  if (frames < kSegment)
    throw InvalidInput("stoi: " + std::to_string(frames) +
                       " analysis frames after silence removal, need " +
                       std::to_string(kSegment));

  const double clip = std::pow(10.0, -kClipDb / 20.0);
  double total = 0.0;
  int count = 0;
  std::vector<double> xs(kSegment), ys(kSegment);
  for (int m = kSegment; m <= frames; ++m) {
    for (int b = 0; b < kBands; ++b) {
      for (int t = 0; t < kSegment; ++t) {
        xs[t] = x[b][m - kSegment + t];
        ys[t] = y[b][m - kSegment + t];
      }
      const double scale = Norm(xs.data(), kSegment) / (Norm(ys.data(), kSegment) + kEps);
      for (int t = 0; t < kSegment; ++t)
        ys[t] = std::min(ys[t] * scale, xs[t] * (1.0 + clip));
      double mx = 0.0, my = 0.0;
      for (int t = 0; t < kSegment; ++t) {
        mx += xs[t] / kSegment;
        my += ys[t] / kSegment;
      }
      for (int t = 0; t < kSegment; ++t) {
        xs[t] -= mx;
        ys[t] -= my;
      }
      const double nx = Norm(xs.data(), kSegment) + kEps;
      const double ny = Norm(ys.data(), kSegment) + kEps;
      double corr = 0.0;
      for (int t = 0; t < kSegment; ++t) corr += (xs[t] / nx) * (ys[t] / ny);
      total += corr;
      ++count;
    }
  }
  return total / count;
}

}  // namespace pse::metrics
