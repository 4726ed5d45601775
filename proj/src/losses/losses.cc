// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/losses.h"

#include <cmath>
#include <numbers>

#include "pse/error.h"
#include "pse/nn/ops.h"
#include "pse/nn/spectral.h"

namespace pse::losses {

namespace {

const double kDbPerNeper = 10.0 / std::numbers::ln10;

std::vector<double> Centered(std::span<const double> x, bool subtract) {
  std::vector<double> out(x.begin(), x.end());
  if (!subtract) return out;
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  for (double& v : out) v -= mean;
  return out;
}

// Returns -SI-SDR; fills grad (d loss / d est) when non-null.
double NegSiSdrCore(std::span<const double> est_raw,
                    std::span<const double> ref_raw, const SiSdrOptions& opt,
                    std::vector<double>* grad) {
  if (est_raw.size() != ref_raw.size())
    throw ShapeError("neg_sisdr: length mismatch " +
                     std::to_string(est_raw.size()) + " vs " +
                     std::to_string(ref_raw.size()));
  if (est_raw.size() < 2) throw ShapeError("neg_sisdr: need at least 2 samples");
  bool nonzero = false;
  for (double v : ref_raw) nonzero = nonzero || v != 0.0;
  if (!nonzero) throw InvalidReference("neg_sisdr: reference is all zeros");

  const std::vector<double> e = Centered(est_raw, opt.subtract_mean);
  const std::vector<double> r = Centered(ref_raw, opt.subtract_mean);
  const size_t n = e.size();
  double er = 0.0, rr = 0.0;
  for (size_t i = 0; i < n; ++i) {
    er += e[i] * r[i];
    rr += r[i] * r[i];
  }
  const double denom = rr + opt.eps;
  const double alpha = er / denom;
  const double signal = alpha * alpha * rr;
  double noise = 0.0, rd = 0.0;
  std::vector<double> d(n);
  for (size_t i = 0; i < n; ++i) {
    d[i] = e[i] - alpha * r[i];
    noise += d[i] * d[i];
    rd += r[i] * d[i];
  }
  const double noise_eps = noise + opt.eps;
  const double sisdr = kDbPerNeper * (std::log(signal) - std::log(noise_eps));

  if (grad) {
    grad->assign(n, 0.0);
    // d signal / d e = 2 alpha rr r / denom
    // d noise  / d e = 2 (d - r (r.d) / denom)
    const double ks = 2.0 * alpha * rr / denom / signal;
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double dn = 2.0 * (d[i] - r[i] * rd / denom) / noise_eps;
      (*grad)[i] = -kDbPerNeper * (ks * r[i] - dn);
      mean += (*grad)[i];
    }
    if (opt.subtract_mean) {
      mean /= static_cast<double>(n);
      for (double& g : *grad) g -= mean;
    }
  }
  return -sisdr;
}

void RequireSameShape(const nn::Var& a, const nn::Var& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     nn::ShapeToString(a.shape()) + " vs " +
                     nn::ShapeToString(b.shape()));
}

}  // namespace

double NegSiSdr(std::span<const double> est, std::span<const double> ref,
                const SiSdrOptions& opt) {
  return NegSiSdrCore(est, ref, opt, nullptr);
}

double NegSiSdr(const Waveform& est, const Waveform& ref,
                const SiSdrOptions& opt) {
  return NegSiSdrCore(est.samples, ref.samples, opt, nullptr);
}

nn::Var NegSiSdr(const nn::Var& est, std::span<const double> ref,
                 const SiSdrOptions& opt) {
  if (est.value().rank() != 1)
    throw ShapeError("neg_sisdr: estimate must be rank 1");
  std::vector<double> grad;
  const double value = NegSiSdrCore(
      est.value().values(), ref, opt, est.requires_grad() ? &grad : nullptr);
  return nn::MakeOp(nn::Tensor({1}, value), {est},
                    [grad = std::move(grad)](nn::Node& self) {
                      nn::Node& in = *self.inputs[0];
                      if (!in.requires_grad) return;
                      const double d = self.grad[0];
                      nn::Tensor& g = in.Grad();
                      for (size_t i = 0; i < grad.size(); ++i) g[i] += d * grad[i];
                    });
}

std::string HeitNormName(HeitNorm norm) {
  return norm == HeitNorm::kRealImag ? "real_imag" : "modulus";
}

HeitNorm ParseHeitNorm(const std::string& name) {
  if (name == "real_imag") return HeitNorm::kRealImag;
  if (name == "modulus") return HeitNorm::kModulus;
  throw InvalidParams("unknown HEIT norm '" + name + "'");
}

nn::Var HeitLoss(const nn::Var& a, const nn::Var& b, HeitNorm norm) {
  RequireSameShape(a, b, "heit_loss");
  if (a.value().rank() != 3 || a.dim(0) != 2)
    throw ShapeError("heit_loss: expected [2, frames, bins], got " +
                     nn::ShapeToString(a.shape()));
  const int64_t n = a.value().size();
  const int64_t plane = n / 2;
  const nn::Tensor& av = a.value();
  const nn::Tensor& bv = b.value();
  nn::Tensor sign(a.shape(), 0.0);  // d loss / d a, before the 1/count
  double acc = 0.0;
  double count = 0.0;
  if (norm == HeitNorm::kRealImag) {
    for (int64_t i = 0; i < n; ++i) {
      const double d = av[i] - bv[i];
      acc += std::abs(d);
      sign[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    }
    count = static_cast<double>(n);
  } else {
    for (int64_t i = 0; i < plane; ++i) {
      const double dr = av[i] - bv[i];
      const double di = av[plane + i] - bv[plane + i];
      const double m = std::hypot(dr, di);
      acc += m;
      if (m > 0.0) {
        sign[i] = dr / m;
        sign[plane + i] = di / m;
      }
    }
    count = static_cast<double>(plane);
  }
  const double inv = 1.0 / count;
  return nn::MakeOp(nn::Tensor({1}, acc * inv), {a, b},
                    [sign = std::move(sign), inv](nn::Node& self) {
                      const double d = self.grad[0] * inv;
                      if (self.inputs[0]->requires_grad)
                        self.inputs[0]->Grad().Add(sign, d);
                      if (self.inputs[1]->requires_grad)
                        self.inputs[1]->Grad().Add(sign, -d);
                    });
}

double HeitLoss(const ComplexSpectrogram& a, const ComplexSpectrogram& b,
                HeitNorm norm) {
  if (a.frames != b.frames || a.bins != b.bins || !(a.params == b.params))
    throw ShapeError("heit_loss: spectrogram shapes or parameters differ");
  nn::NoGradGuard guard;
  return HeitLoss(nn::Var(nn::SpecToTensor(a)), nn::Var(nn::SpecToTensor(b)), norm)
      .value()[0];
}

double LossValue::component(const std::string& name) const {
  auto it = components.find(name);
  return it == components.end() ? 0.0 : it->second;
}

LossValue BatchMean(const std::vector<LossValue>& items) {
  LossValue out;
  if (items.empty()) return out;
  const double n = static_cast<double>(items.size());
  for (const LossValue& v : items) {
    out.total += v.total;
    for (const auto& [k, c] : v.components) out.components[k] += c;
  }
  out.total /= n;
  for (auto& [k, c] : out.components) c /= n;
  return out;
}

LossValue UsefLoss(const Waveform& est, const Waveform& ref) {
  LossValue v;
  v.total = NegSiSdr(est, ref);
  v.components["sisdr_1"] = v.total;
  return v;
}

LossValue DsefLoss(const EnhancedOutput& y1, const EnhancedOutput& y2,
                   const Waveform& ref, double lambda, HeitNorm norm) {
  if (lambda < 0.0) throw InvalidParams("dsef_loss: lambda must be >= 0");
  LossValue v;
  const double s1 = NegSiSdr(y1.wave, ref);
  const double s2 = NegSiSdr(y2.wave, ref);
  const double h = HeitLoss(y1.spec, y2.spec, norm);
  v.components = {{"sisdr_1", s1}, {"sisdr_2", s2}, {"heit", h}};
  v.total = (s1 + s2) + lambda * h;
  return v;
}

GradLoss UsefLoss(const nn::Var& est, std::span<const double> ref) {
  GradLoss out;
  out.total = NegSiSdr(est, ref);
  out.value.total = out.total.value()[0];
  out.value.components["sisdr_1"] = out.value.total;
  return out;
}

GradLoss DsefLoss(const nn::Var& wave1, const nn::Var& spec1,
                  const nn::Var& wave2, const nn::Var& spec2,
                  std::span<const double> ref, double lambda, HeitNorm norm) {
  if (lambda < 0.0) throw InvalidParams("dsef_loss: lambda must be >= 0");
  if (wave1.shape() != wave2.shape())
    throw ShapeError("dsef_loss: output lengths differ");
  const nn::Var s1 = NegSiSdr(wave1, ref);
  const nn::Var s2 = NegSiSdr(wave2, ref);
  const nn::Var h = HeitLoss(spec1, spec2, norm);
  GradLoss out;
  out.total = nn::Add(nn::Add(s1, s2), nn::Scale(h, lambda));
  out.value.components = {{"sisdr_1", s1.value()[0]},
                          {"sisdr_2", s2.value()[0]},
                          {"heit", h.value()[0]}};
  out.value.total = out.total.value()[0];
  return out;
}

}  // namespace pse::losses
