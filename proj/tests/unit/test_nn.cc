#include <cmath>
#include <functional>

#include "doctest.h"
#include "pse/error.h"
#include "pse/nn/ops.h"
#include "pse/nn/spectral.h"
#include "pse/rng.h"

using namespace pse;
using namespace pse::nn;

namespace {

Tensor RandomTensor(Shape shape, uint64_t seed, double scale = 1.0) {
  Tensor t(shape);
  Rng rng(seed);
  for (double& v : t.values()) v = scale * StandardNormal(rng);
  return t;
}

using Fn = std::function<Var(const std::vector<Var>&)>;

// Central differences on every input element against the reverse pass of
// sum(w * f(inputs)) with fixed random weights w.
double MaxGradError(const Fn& f, std::vector<Tensor> inputs) {
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.emplace_back(t, true);
  const Var out = f(vars);
  const Var weights(RandomTensor(out.value().shape(), 99));
  Backward(Sum(Mul(out, weights)));
  auto scalar = [&](const std::vector<Tensor>& xs) {
    std::vector<Var> vs;
    for (const Tensor& t : xs) vs.emplace_back(t);
    NoGradGuard guard;
    const Var y = f(vs);
    double s = 0;
    for (int64_t i = 0; i < y.value().size(); ++i) s += y.value()[i] * weights.value()[i];
    return s;
  };
  double worst = 0;
  const double h = 1e-6;
  for (size_t a = 0; a < inputs.size(); ++a) {
    for (int64_t i = 0; i < inputs[a].size(); ++i) {
      auto plus = inputs, minus = inputs;
      plus[a][i] += h;
      minus[a][i] -= h;
      const double numeric = (scalar(plus) - scalar(minus)) / (2 * h);
      const double analytic = vars[a].grad()[i];
      worst = std::max(worst, std::abs(numeric - analytic) /
                                  std::max({std::abs(numeric), std::abs(analytic), 1e-3}));
    }
  }
  return worst;
}

// Direct loop convolution used as the forward oracle.
Tensor NaiveConv(const Tensor& x, const Tensor& w, const Tensor& b, const ConvOptions& o) {
  const int64_t cin = x.dim(0), T = x.dim(1), F = x.dim(2);
  const int64_t cout = w.dim(0), cg = w.dim(1), kt = w.dim(2), kf = w.dim(3);
  const int64_t ot = (T + 2 * o.padding[0] - o.dilation[0] * (kt - 1) - 1) / o.stride[0] + 1;
  const int64_t of = (F + 2 * o.padding[1] - o.dilation[1] * (kf - 1) - 1) / o.stride[1] + 1;
  const int64_t per_group_out = cout / o.groups;
  Tensor y({cout, ot, of});
  for (int64_t co = 0; co < cout; ++co)
    for (int64_t t = 0; t < ot; ++t)
      for (int64_t f = 0; f < of; ++f) {
        double s = b.empty() ? 0.0 : b[co];
        const int64_t g = co / per_group_out;
        for (int64_t ci = 0; ci < cg; ++ci)
          for (int64_t i = 0; i < kt; ++i)
            for (int64_t j = 0; j < kf; ++j) {
              const int64_t tt = t * o.stride[0] - o.padding[0] + i * o.dilation[0];
              const int64_t ff = f * o.stride[1] - o.padding[1] + j * o.dilation[1];
              if (tt < 0 || tt >= T || ff < 0 || ff >= F) continue;
              s += w[((co * cg + ci) * kt + i) * kf + j] * x.at(g * cg + ci, tt, ff);
            }
        y.at(co, t, f) = s;
      }
  (void)cin;
  return y;
}

}  // namespace

TEST_CASE("convolution forward matches the direct loop") {
  struct Case {
    int64_t cin, cout, kt, kf;
    ConvOptions opt;
  };
  const Case cases[] = {
      {2, 3, 1, 1, {}},
      {2, 4, 2, 3, {.stride = {1, 2}, .padding = {1, 1}}},
      {4, 4, 3, 1, {.padding = {2, 0}, .dilation = {2, 1}, .groups = 2}},
      {3, 2, 2, 2, {.stride = {2, 2}}},
  };
  uint64_t seed = 1;
  for (const Case& c : cases) {
    const Tensor x = RandomTensor({c.cin, 6, 7}, seed++);
    const Tensor w = RandomTensor({c.cout, c.cin / c.opt.groups, c.kt, c.kf}, seed++);
    const Tensor b = RandomTensor({c.cout}, seed++);
    const Tensor y = Conv2d(Var(x), Var(w), Var(b), c.opt).value();
    const Tensor want = NaiveConv(x, w, b, c.opt);
    REQUIRE(y.shape() == want.shape());
    for (int64_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv transpose is the adjoint of conv") {
  const ConvOptions opt{.stride = {1, 2}, .padding = {0, 1}};
  const Tensor x = RandomTensor({3, 5, 9}, 1);
  const Tensor w = RandomTensor({2, 3, 2, 3}, 2);
  const Tensor y = Conv2d(Var(x), Var(w), Var(), opt).value();
  const Tensor g = RandomTensor(y.shape(), 3);
  const Tensor back = ConvTranspose2d(Var(g), Var(w), Var(), opt, {5, 9}).value();
  double lhs = 0, rhs = 0;
  for (int64_t i = 0; i < y.size(); ++i) lhs += y[i] * g[i];
  for (int64_t i = 0; i < x.size(); ++i) rhs += x[i] * back[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("reverse-mode gradients match finite differences per op") {
  const double tol = 1e-6;
  CHECK(MaxGradError([](auto& v) { return Mul(Sigmoid(v[0]), Sub(v[0], v[1])); },
                     {RandomTensor({2, 3, 4}, 1), RandomTensor({2, 3, 4}, 2)}) < tol);
  CHECK(MaxGradError([](auto& v) { return PRelu(v[0], v[1]); },
                     {RandomTensor({2, 3, 4}, 3), RandomTensor({2}, 4, 0.3)}) < tol);
  CHECK(MaxGradError([](auto& v) { return AddChannel(MulChannel(v[0], v[1]), v[2]); },
                     {RandomTensor({3, 2, 2}, 5), RandomTensor({3}, 6), RandomTensor({3}, 7)}) < tol);
  CHECK(MaxGradError([](auto& v) { return AddRowBias(MatMul(v[0], v[1]), v[2]); },
                     {RandomTensor({3, 4}, 8), RandomTensor({4, 2}, 9), RandomTensor({2}, 10)}) < tol);
  CHECK(MaxGradError([](auto& v) { return CrossAttention(v[0], v[1], v[2]); },
                     {RandomTensor({3, 4}, 11), RandomTensor({5, 4}, 12), RandomTensor({5, 2}, 13)}) < tol);
  CHECK(MaxGradError([](auto& v) { return ChannelNorm(v[0], v[1], v[2]); },
                     {RandomTensor({2, 3, 4}, 14), RandomTensor({2}, 15), RandomTensor({2}, 16)}) < tol);
  CHECK(MaxGradError([](auto& v) { return Permute3(Concat({v[0], v[1]}), {2, 0, 1}); },
                     {RandomTensor({1, 3, 4}, 17), RandomTensor({2, 3, 4}, 18)}) < tol);
  CHECK(MaxGradError([](auto& v) { return UpsampleNearest(AdaptiveAvgPool(v[0], 2, 3), 5, 7); },
                     {RandomTensor({2, 5, 7}, 19)}) < tol);
  CHECK(MaxGradError([](auto& v) { return Mul(GlobalAvgPool(v[0]), GlobalAvgPool(v[0])); },
                     {RandomTensor({2, 3, 4}, 20)}) < tol);
  CHECK(MaxGradError([](auto& v) { return FrameMeanBroadcast(v[0], 4); },
                     {RandomTensor({2, 3, 5}, 21)}) < tol);
  const ConvOptions opt{.stride = {1, 2}, .padding = {1, 1}, .dilation = {2, 1}};
  CHECK(MaxGradError([&](auto& v) { return Conv2d(v[0], v[1], v[2], opt); },
                     {RandomTensor({2, 5, 7}, 22), RandomTensor({3, 2, 2, 3}, 23),
                      RandomTensor({3}, 24)}) < tol);
  CHECK(MaxGradError([&](auto& v) { return ConvTranspose2d(v[0], v[1], v[2], opt, {5, 7}); },
                     {RandomTensor({3, 5, 4}, 25), RandomTensor({3, 2, 2, 3}, 26),
                      RandomTensor({2}, 27)}) < tol);
}

TEST_CASE("constant values pass through attention exactly") {
  Tensor v({4, 3});
  for (int64_t r = 0; r < 4; ++r)
    for (int64_t c = 0; c < 3; ++c) v[r * 3 + c] = 0.1 * (c + 1);
  const Tensor y =
      CrossAttention(Var(RandomTensor({5, 2}, 1)), Var(RandomTensor({4, 2}, 2)), Var(v)).value();
  for (int64_t r = 0; r < 5; ++r)
    for (int64_t c = 0; c < 3; ++c) CHECK(y[r * 3 + c] == v[c]);
}

TEST_CASE("shape errors are reported") {
  CHECK_THROWS_AS(Add(Var(Tensor({2})), Var(Tensor({3}))), ShapeError);
  CHECK_THROWS_AS(MatMul(Var(Tensor({2, 3})), Var(Tensor({2, 3}))), ShapeError);
  CHECK_THROWS_AS(Reshape(Var(Tensor({2, 3})), {4}), ShapeError);
  CHECK(ConvOutSize(129, 3, 2, 1, 1) == 65);
}

TEST_CASE("no-grad guard records no graph") {
  Var x(RandomTensor({3}, 1), true);
  {
    NoGradGuard guard;
    CHECK_FALSE(Sum(Mul(x, x)).requires_grad());
  }
  CHECK(Sum(Mul(x, x)).requires_grad());
}
