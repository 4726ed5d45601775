// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/dsp/drc.h"

#include <cmath>

#include "pse/error.h"

namespace pse {

namespace {

Complex PowerLaw(Complex z, double power) {
  const double m = std::abs(z);
  if (m == 0.0) return Complex(0.0, 0.0);
  return z * std::pow(m, power - 1.0);
}

void CheckExponent(double exponent) {
  if (!(exponent > 0.0 && exponent <= 1.0))
    throw InvalidParams("DRC exponent must lie in (0, 1]");
}

}  // namespace

Complex CompressValue(Complex z, double exponent) {
  return PowerLaw(z, exponent);
}

Complex ExpandValue(Complex z, double exponent) {
  return PowerLaw(z, 1.0 / exponent);
}

ComplexSpectrogram DrcCompress(const ComplexSpectrogram& spec,
                               double exponent) {
  CheckExponent(exponent);
  if (spec.compressed) throw InvalidState("spectrogram is already compressed");
  ComplexSpectrogram out = spec;
  for (Complex& z : out.data) z = CompressValue(z, exponent);
  out.compressed = true;
  return out;
}

ComplexSpectrogram DrcExpand(const ComplexSpectrogram& spec, double exponent) {
  CheckExponent(exponent);
  if (!spec.compressed) throw InvalidState("spectrogram is not compressed");
  ComplexSpectrogram out = spec;
  for (Complex& z : out.data) z = ExpandValue(z, exponent);
  out.compressed = false;
  return out;
}

}  // namespace pse
