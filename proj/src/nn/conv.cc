// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <Eigen/Dense>

#include "pse/error.h"
#include "pse/nn/ops.h"

namespace pse::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

// Geometry between the large grid a convolution reads (`big`) and the grid
// it writes (`small`).
struct Geometry {
  int64_t channels;
  int64_t big_t, big_f;
  int64_t small_t, small_f;
  int64_t k_t, k_f;
  ConvOptions opt;

  int64_t rows() const { return channels * k_t * k_f; }
  int64_t cols() const { return small_t * small_f; }
};

// col[(c*kT + i)*kF + j, to*Fs + fo] = big[c, to*sT - pT + i*dT, fo*sF - pF + j*dF]
void Im2Col(const double* big, const Geometry& g, double* col) {
  const auto [st, sf] = g.opt.stride;
  const auto [pt, pf] = g.opt.padding;
  const auto [dt, df] = g.opt.dilation;
  const int64_t ncols = g.cols();
  for (int64_t c = 0; c < g.channels; ++c)
    for (int64_t i = 0; i < g.k_t; ++i)
      for (int64_t j = 0; j < g.k_f; ++j) {
        double* row = col + ((c * g.k_t + i) * g.k_f + j) * ncols;
        const double* plane = big + c * g.big_t * g.big_f;
        for (int64_t to = 0; to < g.small_t; ++to) {
          const int64_t t = to * st - pt + i * dt;
          double* dst = row + to * g.small_f;
          if (t < 0 || t >= g.big_t) {
            std::fill(dst, dst + g.small_f, 0.0);
            continue;
          }
          const double* src = plane + t * g.big_f;
          for (int64_t fo = 0; fo < g.small_f; ++fo) {
            const int64_t f = fo * sf - pf + j * df;
            dst[fo] = (f >= 0 && f < g.big_f) ? src[f] : 0.0;
          }
        }
      }
}

// Adjoint of Im2Col: scatters col back onto big (accumulating).
void Col2Im(const double* col, const Geometry& g, double* big) {
  const auto [st, sf] = g.opt.stride;
  const auto [pt, pf] = g.opt.padding;
  const auto [dt, df] = g.opt.dilation;
  const int64_t ncols = g.cols();
  for (int64_t c = 0; c < g.channels; ++c)
    for (int64_t i = 0; i < g.k_t; ++i)
      for (int64_t j = 0; j < g.k_f; ++j) {
        const double* row = col + ((c * g.k_t + i) * g.k_f + j) * ncols;
        double* plane = big + c * g.big_t * g.big_f;
        for (int64_t to = 0; to < g.small_t; ++to) {
          const int64_t t = to * st - pt + i * dt;
          if (t < 0 || t >= g.big_t) continue;
          const double* src = row + to * g.small_f;
          double* dst = plane + t * g.big_f;
          for (int64_t fo = 0; fo < g.small_f; ++fo) {
            const int64_t f = fo * sf - pf + j * df;
            if (f >= 0 && f < g.big_f) dst[f] += src[fo];
          }
        }
      }
}

void CheckOptions(const ConvOptions& opt) {
  for (int a = 0; a < 2; ++a)
    if (opt.stride[a] < 1 || opt.dilation[a] < 1 || opt.padding[a] < 0)
      throw ShapeError("convolution: invalid stride/dilation/padding");
  if (opt.groups < 1) throw ShapeError("convolution: groups must be >= 1");
}

}  // namespace

int64_t ConvOutSize(int64_t in, int64_t kernel, int64_t stride,
                    int64_t padding, int64_t dilation) {
  return (in + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
}

Var Conv2d(const Var& x, const Var& w, const Var& b, const ConvOptions& opt) {
  CheckOptions(opt);
  if (x.value().rank() != 3 || w.value().rank() != 4)
    throw ShapeError("Conv2d: x " + ShapeToString(x.shape()) + ", w " +
                     ShapeToString(w.shape()));
  const int64_t cin = x.dim(0), T = x.dim(1), F = x.dim(2);
  const int64_t cout = w.dim(0), kt = w.dim(2), kf = w.dim(3);
  const int64_t groups = opt.groups;
  if (cin % groups || cout % groups || w.dim(1) != cin / groups)
    throw ShapeError("Conv2d: channel mismatch x " + ShapeToString(x.shape()) +
                     ", w " + ShapeToString(w.shape()));
  if (b.defined() && (b.value().rank() != 1 || b.dim(0) != cout))
    throw ShapeError("Conv2d: bias " + ShapeToString(b.shape()));
  const int64_t ot = ConvOutSize(T, kt, opt.stride[0], opt.padding[0],
                                 opt.dilation[0]);
  const int64_t of = ConvOutSize(F, kf, opt.stride[1], opt.padding[1],
                                 opt.dilation[1]);
  if (ot <= 0 || of <= 0)
    throw ShapeError("Conv2d: input " + ShapeToString(x.shape()) +
                     " too small for kernel");

  const int64_t cin_g = cin / groups, cout_g = cout / groups;
  const Geometry geo{cin_g, T, F, ot, of, kt, kf, opt};
  const int64_t krows = geo.rows(), ncols = geo.cols();

  Tensor out({cout, ot, of});
  std::vector<double> col(krows * ncols);
  for (int64_t g = 0; g < groups; ++g) {
    Im2Col(x.value().data() + g * cin_g * T * F, geo, col.data());
    MapMat(out.data() + g * cout_g * ncols, cout_g, ncols).noalias() =
        CMapMat(w.value().data() + g * cout_g * krows, cout_g, krows) *
        CMapMat(col.data(), krows, ncols);
  }
  if (b.defined())
    for (int64_t c = 0; c < cout; ++c) {
      double* dst = out.data() + c * ncols;
      const double bias = b.value()[c];
      for (int64_t i = 0; i < ncols; ++i) dst[i] += bias;
    }

  std::vector<Var> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  const bool has_bias = b.defined();
  return MakeOp(
      std::move(out), std::move(inputs),
      [geo, groups, cin_g, cout_g, T, F, has_bias](Node& self) {
        const int64_t krows = geo.rows(), ncols = geo.cols();
        Node& xn = *self.inputs[0];
        Node& wn = *self.inputs[1];
        std::vector<double> col(krows * ncols);
        std::vector<double> dcol;
        if (xn.requires_grad) dcol.resize(krows * ncols);
        for (int64_t g = 0; g < groups; ++g) {
          CMapMat dy(self.grad.data() + g * cout_g * ncols, cout_g, ncols);
          if (wn.requires_grad) {
            Im2Col(xn.value.data() + g * cin_g * T * F, geo, col.data());
            MapMat(wn.Grad().data() + g * cout_g * krows, cout_g, krows)
                .noalias() += dy * CMapMat(col.data(), krows, ncols).transpose();
          }
          if (xn.requires_grad) {
            MapMat(dcol.data(), krows, ncols).noalias() =
                CMapMat(wn.value.data() + g * cout_g * krows, cout_g, krows)
                    .transpose() *
                dy;
            Col2Im(dcol.data(), geo, xn.Grad().data() + g * cin_g * T * F);
          }
        }
        if (has_bias && self.inputs[2]->requires_grad) {
          Tensor& gb = self.inputs[2]->Grad();
          for (int64_t c = 0; c < gb.size(); ++c) {
            const double* src = self.grad.data() + c * ncols;
            double acc = 0.0;
            for (int64_t i = 0; i < ncols; ++i) acc += src[i];
            gb[c] += acc;
          }
        }
      });
}

Var ConvTranspose2d(const Var& x, const Var& w, const Var& b,
                    const ConvOptions& opt, std::array<int64_t, 2> out_size) {
  CheckOptions(opt);
  if (opt.groups != 1) throw ShapeError("ConvTranspose2d: groups unsupported");
  if (x.value().rank() != 3 || w.value().rank() != 4 || w.dim(0) != x.dim(0))
    throw ShapeError("ConvTranspose2d: x " + ShapeToString(x.shape()) +
                     ", w " + ShapeToString(w.shape()));
  const int64_t cin = x.dim(0), ts = x.dim(1), fs = x.dim(2);
  const int64_t cout = w.dim(1), kt = w.dim(2), kf = w.dim(3);
  const auto [T, F] = out_size;
  // The forward convolution of the output grid must land back on the input.
  if (ConvOutSize(T, kt, opt.stride[0], opt.padding[0], opt.dilation[0]) != ts ||
      ConvOutSize(F, kf, opt.stride[1], opt.padding[1], opt.dilation[1]) != fs)
    throw ShapeError("ConvTranspose2d: output size inconsistent with input " +
                     ShapeToString(x.shape()));
  if (b.defined() && (b.value().rank() != 1 || b.dim(0) != cout))
    throw ShapeError("ConvTranspose2d: bias " + ShapeToString(b.shape()));

  const Geometry geo{cout, T, F, ts, fs, kt, kf, opt};
  const int64_t krows = geo.rows(), ncols = geo.cols();
  std::vector<double> col(krows * ncols);
  MapMat(col.data(), krows, ncols).noalias() =
      CMapMat(w.value().data(), cin, krows).transpose() *
      CMapMat(x.value().data(), cin, ncols);
  Tensor out({cout, T, F});
  Col2Im(col.data(), geo, out.data());
  if (b.defined())
    for (int64_t c = 0; c < cout; ++c) {
      double* dst = out.data() + c * T * F;
      for (int64_t i = 0; i < T * F; ++i) dst[i] += b.value()[c];
    }

  std::vector<Var> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  const bool has_bias = b.defined();
  return MakeOp(std::move(out), std::move(inputs),
                [geo, cin, has_bias](Node& self) {
                  const int64_t krows = geo.rows(), ncols = geo.cols();
                  Node& xn = *self.inputs[0];
                  Node& wn = *self.inputs[1];
                  std::vector<double> dcol(krows * ncols);
                  Im2Col(self.grad.data(), geo, dcol.data());
                  CMapMat dc(dcol.data(), krows, ncols);
                  if (xn.requires_grad)
                    MapMat(xn.Grad().data(), cin, ncols).noalias() +=
                        CMapMat(wn.value.data(), cin, krows) * dc;
                  if (wn.requires_grad)
                    MapMat(wn.Grad().data(), cin, krows).noalias() +=
                        CMapMat(xn.value.data(), cin, ncols) * dc.transpose();
                  if (has_bias && self.inputs[2]->requires_grad) {
                    Tensor& gb = self.inputs[2]->Grad();
                    const int64_t plane = geo.big_t * geo.big_f;
                    for (int64_t c = 0; c < gb.size(); ++c) {
                      double acc = 0.0;
                      for (int64_t i = 0; i < plane; ++i)
                        acc += self.grad[c * plane + i];
                      gb[c] += acc;
                    }
                  }
                });
}

}  // namespace pse::nn
