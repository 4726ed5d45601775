// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/nn/ops.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "pse/error.h"

namespace pse::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

Tensor* InGrad(Node& self, size_t i) {
  Node& in = *self.inputs[i];
  return in.requires_grad ? &in.Grad() : nullptr;
}

const Tensor& InValue(Node& self, size_t i) { return self.inputs[i]->value; }

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
}

void RequireRank(const Var& x, int rank, const char* op) {
  if (x.value().rank() != rank)
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got " +
                     ShapeToString(x.shape()));
}

// Channel stride for [C, ...] broadcasting.
int64_t InnerSize(const Tensor& t) { return t.size() / t.dim(0); }

void RequireChannelVector(const Var& x, const Var& v, const char* op) {
  if (v.value().rank() != 1 || v.dim(0) != x.dim(0))
    throw ShapeError(std::string(op) + ": channel vector " +
                     ShapeToString(v.shape()) + " does not match " +
                     ShapeToString(x.shape()));
}

}  // namespace

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Add");
  Tensor out = a.value();
  out.Add(b.value());
  return MakeOp(std::move(out), {a, b}, [](Node& self) {
    if (Tensor* g = InGrad(self, 0)) g->Add(self.grad);
    if (Tensor* g = InGrad(self, 1)) g->Add(self.grad);
  });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Sub");
  Tensor out = a.value();
  out.Add(b.value(), -1.0);
  return MakeOp(std::move(out), {a, b}, [](Node& self) {
    if (Tensor* g = InGrad(self, 0)) g->Add(self.grad);
    if (Tensor* g = InGrad(self, 1)) g->Add(self.grad, -1.0);
  });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Mul");
  Tensor out(a.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out[i] = a.value()[i] * b.value()[i];
  return MakeOp(std::move(out), {a, b}, [n](Node& self) {
    const Tensor& av = InValue(self, 0);
    const Tensor& bv = InValue(self, 1);
    if (Tensor* g = InGrad(self, 0))
      for (int64_t i = 0; i < n; ++i) (*g)[i] += self.grad[i] * bv[i];
    if (Tensor* g = InGrad(self, 1))
      for (int64_t i = 0; i < n; ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

Var Scale(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= s;
  return MakeOp(std::move(out), {a}, [s](Node& self) {
    if (Tensor* g = InGrad(self, 0)) g->Add(self.grad, s);
  });
}

Var Sigmoid(const Var& x) {
  Tensor out(x.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-x.value()[i]));
  return MakeOp(std::move(out), {x}, [n](Node& self) {
    Tensor* g = InGrad(self, 0);
    if (!g) return;
    for (int64_t i = 0; i < n; ++i) {
      const double y = self.value[i];
      (*g)[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Var PRelu(const Var& x, const Var& slope) {
  RequireChannelVector(x, slope, "PRelu");
  const int64_t C = x.dim(0);
  const int64_t inner = InnerSize(x.value());
  Tensor out(x.shape());
  for (int64_t c = 0; c < C; ++c) {
    const double a = slope.value()[c];
    for (int64_t i = c * inner; i < (c + 1) * inner; ++i) {
      const double v = x.value()[i];
      out[i] = v > 0.0 ? v : a * v;
    }
  }
  return MakeOp(std::move(out), {x, slope}, [C, inner](Node& self) {
    const Tensor& xv = InValue(self, 0);
    const Tensor& av = InValue(self, 1);
    Tensor* gx = InGrad(self, 0);
    Tensor* ga = InGrad(self, 1);
    for (int64_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int64_t i = c * inner; i < (c + 1) * inner; ++i) {
        const double v = xv[i];
        const double g = self.grad[i];
        if (v > 0.0) {
          if (gx) (*gx)[i] += g;
        } else {
          if (gx) (*gx)[i] += g * av[c];
          acc += g * v;
        }
      }
      if (ga) (*ga)[c] += acc;
    }
  });
}

Var MulChannel(const Var& x, const Var& gates) {
  RequireChannelVector(x, gates, "MulChannel");
  const int64_t C = x.dim(0);
  const int64_t inner = InnerSize(x.value());
  Tensor out(x.shape());
  for (int64_t c = 0; c < C; ++c)
    for (int64_t i = c * inner; i < (c + 1) * inner; ++i)
      out[i] = x.value()[i] * gates.value()[c];
  return MakeOp(std::move(out), {x, gates}, [C, inner](Node& self) {
    const Tensor& xv = InValue(self, 0);
    const Tensor& gv = InValue(self, 1);
    Tensor* gx = InGrad(self, 0);
    Tensor* gg = InGrad(self, 1);
    for (int64_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int64_t i = c * inner; i < (c + 1) * inner; ++i) {
        if (gx) (*gx)[i] += self.grad[i] * gv[c];
        acc += self.grad[i] * xv[i];
      }
      if (gg) (*gg)[c] += acc;
    }
  });
}

Var AddChannel(const Var& x, const Var& v) {
  RequireChannelVector(x, v, "AddChannel");
  const int64_t C = x.dim(0);
  const int64_t inner = InnerSize(x.value());
  Tensor out = x.value();
  for (int64_t c = 0; c < C; ++c)
    for (int64_t i = c * inner; i < (c + 1) * inner; ++i)
      out[i] += v.value()[c];
  return MakeOp(std::move(out), {x, v}, [C, inner](Node& self) {
    if (Tensor* gx = InGrad(self, 0)) gx->Add(self.grad);
    if (Tensor* gv = InGrad(self, 1)) {
      for (int64_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int64_t i = c * inner; i < (c + 1) * inner; ++i)
          acc += self.grad[i];
        (*gv)[c] += acc;
      }
    }
  });
}

Var Sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  return MakeOp(Tensor({1}, acc), {x}, [](Node& self) {
    Tensor* g = InGrad(self, 0);
    if (!g) return;
    const double d = self.grad[0];
    for (double& v : g->values()) v += d;
  });
}

Var Mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  return Scale(Sum(x), 1.0 / n);
}

Var Reshape(const Var& x, Shape shape) {
  Tensor out = x.value().Reshaped(std::move(shape));
  return MakeOp(std::move(out), {x}, [](Node& self) {
    if (Tensor* g = InGrad(self, 0)) g->Add(self.grad);
  });
}

Var Permute3(const Var& x, std::array<int, 3> perm) {
  RequireRank(x, 3, "Permute3");
  const Shape in_shape = x.shape();
  Shape out_shape{in_shape[perm[0]], in_shape[perm[1]], in_shape[perm[2]]};
  // Strides of the input, indexed by output axis.
  const std::array<int64_t, 3> in_strides{in_shape[1] * in_shape[2],
                                          in_shape[2], 1};
  const std::array<int64_t, 3> s{in_strides[perm[0]], in_strides[perm[1]],
                                 in_strides[perm[2]]};
  Tensor out(out_shape);
  int64_t o = 0;
  for (int64_t i = 0; i < out_shape[0]; ++i)
    for (int64_t j = 0; j < out_shape[1]; ++j)
      for (int64_t k = 0; k < out_shape[2]; ++k)
        out[o++] = x.value()[i * s[0] + j * s[1] + k * s[2]];
  return MakeOp(std::move(out), {x}, [out_shape, s](Node& self) {
    Tensor* g = InGrad(self, 0);
    if (!g) return;
    int64_t o = 0;
    for (int64_t i = 0; i < out_shape[0]; ++i)
      for (int64_t j = 0; j < out_shape[1]; ++j)
        for (int64_t k = 0; k < out_shape[2]; ++k)
          (*g)[i * s[0] + j * s[1] + k * s[2]] += self.grad[o++];
  });
}

Var Concat(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("Concat of nothing");
  Shape shape = xs[0].shape();
  int64_t total = 0;
  for (const Var& x : xs) {
    Shape tail(x.shape().begin() + 1, x.shape().end());
    Shape ref(shape.begin() + 1, shape.end());
    if (x.value().rank() != static_cast<int>(shape.size()) || tail != ref)
      throw ShapeError("Concat: incompatible " + ShapeToString(x.shape()) +
                       " vs " + ShapeToString(shape));
    total += x.dim(0);
  }
  shape[0] = total;
  Tensor out(shape);
  std::vector<int64_t> offsets;
  int64_t off = 0;
  for (const Var& x : xs) {
    offsets.push_back(off);
    std::copy(x.value().data(), x.value().data() + x.value().size(),
              out.data() + off);
    off += x.value().size();
  }
  return MakeOp(std::move(out), xs, [offsets](Node& self) {
    for (size_t i = 0; i < offsets.size(); ++i) {
      Tensor* g = InGrad(self, i);
      if (!g) continue;
      const double* src = self.grad.data() + offsets[i];
      for (int64_t j = 0; j < g->size(); ++j) (*g)[j] += src[j];
    }
  });
}

Var MatMul(const Var& a, const Var& b) {
  RequireRank(a, 2, "MatMul");
  RequireRank(b, 2, "MatMul");
  if (a.dim(1) != b.dim(0))
    throw ShapeError("MatMul: " + ShapeToString(a.shape()) + " x " +
                     ShapeToString(b.shape()));
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  MapMat(out.data(), m, n).noalias() =
      CMapMat(a.value().data(), m, k) * CMapMat(b.value().data(), k, n);
  return MakeOp(std::move(out), {a, b}, [m, k, n](Node& self) {
    CMapMat dy(self.grad.data(), m, n);
    if (Tensor* g = InGrad(self, 0))
      MapMat(g->data(), m, k).noalias() +=
          dy * CMapMat(InValue(self, 1).data(), k, n).transpose();
    if (Tensor* g = InGrad(self, 1))
      MapMat(g->data(), k, n).noalias() +=
          CMapMat(InValue(self, 0).data(), m, k).transpose() * dy;
  });
}

Var AddRowBias(const Var& x, const Var& b) {
  RequireRank(x, 2, "AddRowBias");
  if (b.value().rank() != 1 || b.dim(0) != x.dim(1))
    throw ShapeError("AddRowBias: bias " + ShapeToString(b.shape()) +
                     " for " + ShapeToString(x.shape()));
  const int64_t m = x.dim(0), n = x.dim(1);
  Tensor out = x.value();
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out[i * n + j] += b.value()[j];
  return MakeOp(std::move(out), {x, b}, [m, n](Node& self) {
    if (Tensor* g = InGrad(self, 0)) g->Add(self.grad);
    if (Tensor* g = InGrad(self, 1))
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) (*g)[j] += self.grad[i * n + j];
  });
}

Var CrossAttention(const Var& q, const Var& k, const Var& v) {
  RequireRank(q, 2, "CrossAttention");
  RequireRank(k, 2, "CrossAttention");
  RequireRank(v, 2, "CrossAttention");
  const int64_t tq = q.dim(0), d = q.dim(1), tk = k.dim(0), dv = v.dim(1);
  if (k.dim(1) != d || v.dim(0) != tk || tk == 0)
    throw ShapeError("CrossAttention: q " + ShapeToString(q.shape()) +
                     ", k " + ShapeToString(k.shape()) + ", v " +
                     ShapeToString(v.shape()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  RowMat probs = CMapMat(q.value().data(), tq, d) *
                 CMapMat(k.value().data(), tk, d).transpose() * scale;
  for (int64_t i = 0; i < tq; ++i) {
    const double mx = probs.row(i).maxCoeff();
    double total = 0.0;
    for (int64_t j = 0; j < tk; ++j) {
      probs(i, j) = std::exp(probs(i, j) - mx);
      total += probs(i, j);
    }
    probs.row(i) /= total;
  }
  CMapMat values(v.value().data(), tk, dv);
  RowMat centered = values.rowwise() - values.row(0);
  Tensor out({tq, dv});
  MapMat o(out.data(), tq, dv);
  o.noalias() = probs * centered;
  o.rowwise() += values.row(0);

  return MakeOp(std::move(out), {q, k, v},
                [probs = std::move(probs), centered = std::move(centered), tq,
                 d, tk, dv, scale](Node& self) {
                  CMapMat dout(self.grad.data(), tq, dv);
                  if (Tensor* gv = InGrad(self, 2))
                    MapMat(gv->data(), tk, dv).noalias() +=
                        probs.transpose() * dout;
                  Tensor* gq = InGrad(self, 0);
                  Tensor* gk = InGrad(self, 1);
                  if (!gq && !gk) return;
                  RowMat dp = dout * centered.transpose();
                  RowMat ds(tq, tk);
                  for (int64_t i = 0; i < tq; ++i) {
                    const double dot = dp.row(i).dot(probs.row(i));
                    for (int64_t j = 0; j < tk; ++j)
                      ds(i, j) = probs(i, j) * (dp(i, j) - dot) * scale;
                  }
                  if (gq)
                    MapMat(gq->data(), tq, d).noalias() +=
                        ds * CMapMat(InValue(self, 1).data(), tk, d);
                  if (gk)
                    MapMat(gk->data(), tk, d).noalias() +=
                        ds.transpose() * CMapMat(InValue(self, 0).data(), tq, d);
                });
}

Var ChannelNorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  RequireChannelVector(x, gamma, "ChannelNorm");
  RequireChannelVector(x, beta, "ChannelNorm");
  const int64_t C = x.dim(0);
  const int64_t n = InnerSize(x.value());
  Tensor out(x.shape());
  std::vector<double> inv_std(C);
  Tensor xhat(x.shape());
  for (int64_t c = 0; c < C; ++c) {
    const double* src = x.value().data() + c * n;
    double mean = 0.0;
    for (int64_t i = 0; i < n; ++i) mean += src[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t i = 0; i < n; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(n);
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    for (int64_t i = 0; i < n; ++i) {
      const double h = (src[i] - mean) * inv_std[c];
      xhat[c * n + i] = h;
      out[c * n + i] = gamma.value()[c] * h + beta.value()[c];
    }
  }
  return MakeOp(
      std::move(out), {x, gamma, beta},
      [C, n, inv_std = std::move(inv_std), xhat = std::move(xhat)](Node& self) {
        const Tensor& gv = InValue(self, 1);
        Tensor* gx = InGrad(self, 0);
        Tensor* gg = InGrad(self, 1);
        Tensor* gb = InGrad(self, 2);
        const double nd = static_cast<double>(n);
        for (int64_t c = 0; c < C; ++c) {
          const double* dy = self.grad.data() + c * n;
          const double* h = xhat.data() + c * n;
          double sum_dy = 0.0, sum_dy_h = 0.0;
          for (int64_t i = 0; i < n; ++i) {
            sum_dy += dy[i];
            sum_dy_h += dy[i] * h[i];
          }
          if (gg) (*gg)[c] += sum_dy_h;
          if (gb) (*gb)[c] += sum_dy;
          if (gx) {
            const double k = gv[c] * inv_std[c] / nd;
            double* dx = gx->data() + c * n;
            for (int64_t i = 0; i < n; ++i)
              dx[i] += k * (nd * dy[i] - sum_dy - h[i] * sum_dy_h);
          }
        }
      });
}

Var GlobalAvgPool(const Var& x) {
  const int64_t C = x.dim(0);
  const int64_t n = InnerSize(x.value());
  Tensor out({C});
  for (int64_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += x.value()[c * n + i];
    out[c] = acc / static_cast<double>(n);
  }
  return MakeOp(std::move(out), {x}, [C, n](Node& self) {
    Tensor* g = InGrad(self, 0);
    if (!g) return;
    for (int64_t c = 0; c < C; ++c) {
      const double d = self.grad[c] / static_cast<double>(n);
      for (int64_t i = 0; i < n; ++i) (*g)[c * n + i] += d;
    }
  });
}

namespace {

struct Cell {
  int64_t begin, end;
};

std::vector<Cell> AdaptiveCells(int64_t in, int64_t out) {
  std::vector<Cell> cells(out);
  for (int64_t i = 0; i < out; ++i) {
    cells[i].begin = (i * in) / out;
    cells[i].end = ((i + 1) * in + out - 1) / out;
  }
  return cells;
}

}  // namespace

Var AdaptiveAvgPool(const Var& x, int64_t out_t, int64_t out_f) {
  RequireRank(x, 3, "AdaptiveAvgPool");
  const int64_t C = x.dim(0), T = x.dim(1), F = x.dim(2);
  if (out_t <= 0 || out_f <= 0 || T == 0 || F == 0)
    throw ShapeError("AdaptiveAvgPool: bad sizes");
  auto rows = AdaptiveCells(T, out_t);
  auto cols = AdaptiveCells(F, out_f);
  Tensor out({C, out_t, out_f});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t i = 0; i < out_t; ++i)
      for (int64_t j = 0; j < out_f; ++j) {
        double acc = 0.0;
        for (int64_t t = rows[i].begin; t < rows[i].end; ++t)
          for (int64_t f = cols[j].begin; f < cols[j].end; ++f)
            acc += x.value().at(c, t, f);
        const double cnt = static_cast<double>((rows[i].end - rows[i].begin) *
                                               (cols[j].end - cols[j].begin));
        out.at(c, i, j) = acc / cnt;
      }
  return MakeOp(std::move(out), {x},
                [C, out_t, out_f, rows, cols](Node& self) {
                  Tensor* g = InGrad(self, 0);
                  if (!g) return;
                  for (int64_t c = 0; c < C; ++c)
                    for (int64_t i = 0; i < out_t; ++i)
                      for (int64_t j = 0; j < out_f; ++j) {
                        const double cnt = static_cast<double>(
                            (rows[i].end - rows[i].begin) *
                            (cols[j].end - cols[j].begin));
                        const double d = self.grad.at(c, i, j) / cnt;
                        for (int64_t t = rows[i].begin; t < rows[i].end; ++t)
                          for (int64_t f = cols[j].begin; f < cols[j].end; ++f)
                            g->at(c, t, f) += d;
                      }
                });
}

Var UpsampleNearest(const Var& x, int64_t T, int64_t F) {
  RequireRank(x, 3, "UpsampleNearest");
  const int64_t C = x.dim(0), t_in = x.dim(1), f_in = x.dim(2);
  Tensor out({C, T, F});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t t = 0; t < T; ++t)
      for (int64_t f = 0; f < F; ++f)
        out.at(c, t, f) = x.value().at(c, t * t_in / T, f * f_in / F);
  return MakeOp(std::move(out), {x}, [C, T, F, t_in, f_in](Node& self) {
    Tensor* g = InGrad(self, 0);
    if (!g) return;
    for (int64_t c = 0; c < C; ++c)
      for (int64_t t = 0; t < T; ++t)
        for (int64_t f = 0; f < F; ++f)
          g->at(c, t * t_in / T, f * f_in / F) += self.grad.at(c, t, f);
  });
}

Var FrameMeanBroadcast(const Var& x, int64_t T) {
  RequireRank(x, 3, "FrameMeanBroadcast");
  const int64_t C = x.dim(0), te = x.dim(1), F = x.dim(2);
  if (te == 0 || T <= 0) throw ShapeError("FrameMeanBroadcast: empty input");
  Tensor out({C, T, F});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t f = 0; f < F; ++f) {
      // Shifted accumulation keeps a constant sequence exact.
      const double first = x.value().at(c, 0, f);
      double acc = 0.0;
      for (int64_t t = 0; t < te; ++t) acc += x.value().at(c, t, f) - first;
      const double mean = first + acc / static_cast<double>(te);
      for (int64_t t = 0; t < T; ++t) out.at(c, t, f) = mean;
    }
  return MakeOp(std::move(out), {x}, [C, T, te, F](Node& self) {
    Tensor* g = InGrad(self, 0);
    if (!g) return;
    for (int64_t c = 0; c < C; ++c)
      for (int64_t f = 0; f < F; ++f) {
        double acc = 0.0;
        for (int64_t t = 0; t < T; ++t) acc += self.grad.at(c, t, f);
        acc /= static_cast<double>(te);
        for (int64_t t = 0; t < te; ++t) g->at(c, t, f) += acc;
      }
  });
}

}  // namespace pse::nn
