// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <span>

namespace pse {

// Real-input DFT of even size n backed by FFTW. Plans are created once per
// size and shared; Forward/Inverse are safe to call concurrently.
class RealFft {
 public:
  explicit RealFft(int n);

  int size() const { return n_; }
  // in: n reals -> out: n/2 + 1 bins, unnormalized.
  void Forward(std::span<const double> in,
               std::span<std::complex<double>> out) const;
  // in: n/2 + 1 bins -> out: n reals, scaled by 1/n. The imaginary parts
  // of the DC and Nyquist bins are ignored.
  void Inverse(std::span<const std::complex<double>> in,
               std::span<double> out) const;

 private:
  int n_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace pse
