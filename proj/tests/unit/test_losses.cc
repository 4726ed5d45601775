#include <cmath>

#include "doctest.h"
#include "oracles/sisdr_reference.h"
#include "pse/dsp/stft.h"
#include "pse/error.h"
#include "pse/losses.h"
#include "pse/nn/ops.h"
#include "pse/nn/spectral.h"
#include "pse/rng.h"

using namespace pse;
using namespace pse::losses;

namespace {

std::vector<double> RandomSignal(size_t n, uint64_t seed, double rms = 0.1) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rms * StandardNormal(rng);
  return x;
}

ComplexSpectrogram RandomSpec(uint64_t seed) {
  return Stft(Waveform(RandomSignal(1600, seed), 8000), DefaultStftParams(8000));
}

}  // namespace

TEST_CASE("negative SI-SDR matches the direct formula") {
  for (uint64_t s = 0; s < 30; ++s) {
    // One second at 8 kHz: the fixed epsilon stays negligible next to
    // the energy of 0.1 * ref.
    const auto ref = RandomSignal(8000, s);
    auto est = RandomSignal(8000, s + 100, 0.05);
    for (size_t i = 0; i < est.size(); ++i) est[i] += ref[i];
    CHECK(std::abs(-NegSiSdr(est, ref) - oracle::SiSdrReference(est, ref)) < 1e-9);
    CHECK(std::abs(-NegSiSdr(est, ref, {.subtract_mean = false}) -
                   oracle::SiSdrReference(est, ref, false)) < 1e-9);
    for (double c : {0.1, 3.0, -2.0}) {
      std::vector<double> scaled = ref;
      for (double& v : scaled) v *= c;
      CHECK(std::abs(NegSiSdr(est, scaled) - NegSiSdr(est, ref)) < 1e-6);
    }
  }
  CHECK(NegSiSdr(std::vector<double>{1, 0}, std::vector<double>{1, 1},
                 {.subtract_mean = false}) == doctest::Approx(0.0));
  const auto ref = RandomSignal(100, 1);
  CHECK_THROWS_AS(NegSiSdr(RandomSignal(99, 2), ref), ShapeError);
  CHECK_THROWS_AS(NegSiSdr(ref, std::vector<double>(100, 0.0)), InvalidReference);
}

TEST_CASE("differentiable SI-SDR agrees with the plain form and finite differences") {
  const auto ref = RandomSignal(200, 3);
  auto est = RandomSignal(200, 4);
  nn::Var x(nn::Tensor({200}, est), true);
  const nn::Var loss = NegSiSdr(x, ref);
  CHECK(loss.value()[0] == doctest::Approx(NegSiSdr(est, ref)).epsilon(1e-12));
  nn::Backward(loss);
  for (size_t i : {0u, 17u, 199u}) {
    auto plus = est, minus = est;
    plus[i] += 1e-6;
    minus[i] -= 1e-6;
    const double numeric = (NegSiSdr(plus, ref) - NegSiSdr(minus, ref)) / 2e-6;
    CHECK(x.grad()[i] == doctest::Approx(numeric).epsilon(1e-5));
  }
}

TEST_CASE("consistency loss identities") {
  for (uint64_t s = 0; s < 50; ++s) {
    const auto a = RandomSpec(s), b = RandomSpec(s + 1000);
    for (HeitNorm norm : {HeitNorm::kRealImag, HeitNorm::kModulus}) {
      CHECK(HeitLoss(a, a, norm) == 0.0);
      CHECK(HeitLoss(a, b, norm) == HeitLoss(b, a, norm));
      CHECK(HeitLoss(a, b, norm) > 0.0);
    }
  }
  // One element differing by (3, 4): |.| over both planes vs the modulus.
  ComplexSpectrogram a = RandomSpec(1), b = a;
  b.data[5] += Complex(3.0, 4.0);
  const double cells = static_cast<double>(a.data.size());
  CHECK(HeitLoss(a, b, HeitNorm::kRealImag) == doctest::Approx(7.0 / (2 * cells)));
  CHECK(HeitLoss(a, b, HeitNorm::kModulus) == doctest::Approx(5.0 / cells));
  ComplexSpectrogram shorter = a;
  shorter.frames -= 1;
  shorter.data.resize(static_cast<size_t>(shorter.frames) * shorter.bins);
  CHECK_THROWS_AS(HeitLoss(a, shorter), ShapeError);

  const nn::Var va(nn::SpecToTensor(a)), vb(nn::SpecToTensor(b));
  CHECK(HeitLoss(va, vb).value()[0] == doctest::Approx(HeitLoss(a, b)).epsilon(1e-12));
}

TEST_CASE("paired loss is linear in the consistency weight") {
  const Waveform ref(RandomSignal(1600, 7), 8000);
  EnhancedOutput y1{Waveform(RandomSignal(1600, 8), 8000), RandomSpec(8)};
  EnhancedOutput y2{Waveform(RandomSignal(1600, 9), 8000), RandomSpec(9)};
  const LossValue zero = DsefLoss(y1, y2, ref, 0.0);
  CHECK(zero.total == zero.component("sisdr_1") + zero.component("sisdr_2"));
  for (double lambda : {0.5, 1.0, 3.0}) {
    const LossValue v = DsefLoss(y1, y2, ref, lambda);
    CHECK(std::abs(v.total - (zero.total + lambda * v.component("heit"))) < 1e-9);
  }
  const LossValue single = UsefLoss(y1.wave, ref);
  CHECK(single.total == single.component("sisdr_1"));
  CHECK(single.components.count("heit") == 0);
}

TEST_CASE("batch mean averages totals and components") {
  LossValue a, b;
  a.total = 1.0;
  a.components = {{"sisdr_1", 2.0}};
  b.total = 3.0;
  b.components = {{"sisdr_1", 4.0}};
  const LossValue m = BatchMean({a, b});
  CHECK(m.total == 2.0);
  CHECK(m.component("sisdr_1") == 3.0);
}
