// Direct-formula SI-SDR: mean removal, projection, power ratio in dB.

#pragma once

#include <cmath>
#include <vector>

namespace oracle {

inline double SiSdrReference(std::vector<double> est, std::vector<double> ref,
                             bool subtract_mean = true) {
  const double eps = 1e-8;
  const size_t n = est.size();
  if (subtract_mean) {
    double me = 0, mr = 0;
    for (size_t i = 0; i < n; ++i) {
      me += est[i];
      mr += ref[i];
    }
    for (size_t i = 0; i < n; ++i) {
      est[i] -= me / n;
      ref[i] -= mr / n;
    }
  }
  double dot = 0, rr = 0;
  for (size_t i = 0; i < n; ++i) {
    dot += est[i] * ref[i];
    rr += ref[i] * ref[i];
  }
  const double alpha = dot / (rr + eps);
  double signal = 0, noise = 0;
  for (size_t i = 0; i < n; ++i) {
    const double s = alpha * ref[i];
    signal += s * s;
    noise += (est[i] - s) * (est[i] - s);
  }
  return 10 * std::log10(signal / (noise + eps));
}

}  // namespace oracle
