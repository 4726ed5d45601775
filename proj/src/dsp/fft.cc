// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/dsp/fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "pse/error.h"

namespace pse {

namespace {

struct Plans {
  fftw_plan forward;
  fftw_plan inverse;
};

// The FFTW planner is not thread-safe; execution with new arrays is.
std::mutex& PlannerMutex() {
  static std::mutex m;
  return m;
}

Plans GetPlans(int n) {
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(PlannerMutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<fftw_complex> cplx(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Plans p;
  p.forward = fftw_plan_dft_r2c_1d(n, real.data(), cplx.data(), flags);
  p.inverse = fftw_plan_dft_c2r_1d(n, cplx.data(), real.data(),
                                   flags | FFTW_DESTROY_INPUT);
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2 || n % 2) throw InvalidParams("FFT size must be even and >= 2");
  Plans p = GetPlans(n);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft::Forward(std::span<const double> in,
                      std::span<std::complex<double>> out) const {
  if (static_cast<int>(in.size()) != n_ ||
      static_cast<int>(out.size()) != n_ / 2 + 1)
    throw ShapeError("RealFft::Forward size mismatch");
  // r2c does not modify its input.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_),
                       const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::Inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) const {
  if (static_cast<int>(in.size()) != n_ / 2 + 1 ||
      static_cast<int>(out.size()) != n_)
    throw ShapeError("RealFft::Inverse size mismatch");
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  scratch.front().imag(0.0);
  scratch.back().imag(0.0);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
  const double scale = 1.0 / n_;
  for (double& v : out) v *= scale;
}

}  // namespace pse
