// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/nn/spectral.h"

#include <cmath>

#include "pse/dsp/drc.h"
#include "pse/error.h"

namespace pse::nn {

Tensor SpecToTensor(const ComplexSpectrogram& spec) {
  Tensor t({2, spec.frames, spec.bins});
  const size_t plane = static_cast<size_t>(spec.frames) * spec.bins;
  for (size_t i = 0; i < plane; ++i) {
    t[i] = spec.data[i].real();
    t[plane + i] = spec.data[i].imag();
  }
  return t;
}

ComplexSpectrogram TensorToSpec(const Tensor& t, const StftParams& params,
                                int sample_rate, bool compressed) {
  if (t.rank() != 3 || t.dim(0) != 2)
    throw ShapeError("expected [2, frames, bins], got " + ShapeToString(t.shape()));
  ComplexSpectrogram spec;
  spec.frames = static_cast<int>(t.dim(1));
  spec.bins = static_cast<int>(t.dim(2));
  spec.params = params;
  spec.sample_rate = sample_rate;
  spec.compressed = compressed;
  const size_t plane = static_cast<size_t>(spec.frames) * spec.bins;
  spec.data.resize(plane);
  for (size_t i = 0; i < plane; ++i) spec.data[i] = Complex(t[i], t[plane + i]);
  return spec;
}

Var DrcExpandOp(const Var& spec, double exponent, double eps) {
  if (spec.value().rank() != 3 || spec.dim(0) != 2)
    throw ShapeError("DrcExpandOp: expected [2, frames, bins]");
  if (!(exponent > 0.0 && exponent <= 1.0))
    throw InvalidParams("DRC exponent must lie in (0, 1]");
  const int64_t plane = spec.value().size() / 2;
  const Tensor& x = spec.value();
  Tensor out(spec.shape());
  for (int64_t i = 0; i < plane; ++i) {
    const Complex z = ExpandValue(Complex(x[i], x[plane + i]), exponent);
    out[i] = z.real();
    out[plane + i] = z.imag();
  }
  // out = z * m^p with p = 1/exponent - 1.
  const double p = 1.0 / exponent - 1.0;
  return MakeOp(std::move(out), {spec}, [plane, p, eps](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    const Tensor& x = in.value;
    Tensor& g = in.Grad();
    for (int64_t i = 0; i < plane; ++i) {
      const double a = x[i], b = x[plane + i];
      const double m = std::hypot(a, b);
      const double me = m + eps;
      const double s = std::pow(m, p);
      // d(a m^p)/da = m^p + p a^2 m^(p-2), with m + eps in the second term.
      const double k = p * std::pow(me, p - 2.0);
      const double ga = self.grad[i], gb = self.grad[plane + i];
      g[i] += ga * (s + k * a * a) + gb * (k * a * b);
      g[plane + i] += ga * (k * a * b) + gb * (s + k * b * b);
    }
  });
}

Var IstftOp(const Var& spec, const StftEngine& engine, size_t target_length) {
  if (spec.value().rank() != 3 || spec.dim(0) != 2 ||
      spec.dim(2) != engine.bins())
    throw ShapeError("IstftOp: expected [2, frames, " +
                     std::to_string(engine.bins()) + "], got " +
                     ShapeToString(spec.shape()));
  const int frames = static_cast<int>(spec.dim(1));
  const int64_t plane = spec.value().size() / 2;
  std::vector<Complex> data(plane);
  for (int64_t i = 0; i < plane; ++i)
    data[i] = Complex(spec.value()[i], spec.value()[plane + i]);
  std::vector<double> wave = engine.Synthesize(data, frames, target_length);
  Tensor out({static_cast<int64_t>(target_length)}, std::move(wave));
  return MakeOp(std::move(out), {spec}, [engine, frames, plane](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    const std::vector<Complex> adj =
        engine.SynthesizeAdjoint(self.grad.values(), frames);
    Tensor& g = in.Grad();
    for (int64_t i = 0; i < plane; ++i) {
      g[i] += adj[i].real();
      g[plane + i] += adj[i].imag();
    }
  });
}

}  // namespace pse::nn
