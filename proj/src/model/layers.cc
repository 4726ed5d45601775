// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/model/layers.h"

#include <algorithm>
#include <cmath>

namespace pse {

namespace {

nn::Var Param(const ParameterStore& p, const std::string& name) {
  return p.Get(name);
}

}  // namespace

void Conv2dLayer::Declare(ParamSpecs& specs) const {
  const double fan_in = static_cast<double>(in / opt.groups * k_t * k_f);
  specs.push_back({name + ".weight", {out, in / opt.groups, k_t, k_f},
                   InitKind::kFanInUniform, fan_in});
  specs.push_back({name + ".bias", {out},
                   gate_bias ? InitKind::kZeros : InitKind::kFanInUniform,
                   fan_in});
}

nn::Var Conv2dLayer::operator()(const ParameterStore& p,
                                const nn::Var& x) const {
  return nn::Conv2d(x, Param(p, name + ".weight"), Param(p, name + ".bias"),
                    opt);
}

void DeconvLayer::Declare(ParamSpecs& specs) const {
  const double fan_in = static_cast<double>(out * k_t * k_f);
  specs.push_back({name + ".weight", {in, out, k_t, k_f},
                   InitKind::kFanInUniform, fan_in});
  specs.push_back({name + ".bias", {out}, InitKind::kFanInUniform, fan_in});
}

nn::Var DeconvLayer::operator()(const ParameterStore& p, const nn::Var& x,
                                std::array<int64_t, 2> out_size) const {
  return nn::ConvTranspose2d(x, Param(p, name + ".weight"),
                             Param(p, name + ".bias"), opt, out_size);
}

void NormAct::Declare(ParamSpecs& specs) const {
  specs.push_back({name + ".gamma", {channels}, InitKind::kOnes, 0.0});
  specs.push_back({name + ".beta", {channels}, InitKind::kZeros, 0.0});
  specs.push_back({name + ".slope", {channels}, InitKind::kConstant, 0.25});
}

nn::Var NormAct::operator()(const ParameterStore& p, const nn::Var& x) const {
  nn::Var y = nn::ChannelNorm(x, Param(p, name + ".gamma"),
                              Param(p, name + ".beta"));
  return nn::PRelu(y, Param(p, name + ".slope"));
}

Conv2dBlock::Conv2dBlock(const std::string& name, int64_t in, int64_t out,
                         std::array<int64_t, 2> kernel, nn::ConvOptions opt)
    : conv{name + ".conv", in, out, kernel[0], kernel[1], opt, false},
      act{name + ".norm", out} {}

void Conv2dBlock::Declare(ParamSpecs& specs) const {
  conv.Declare(specs);
  act.Declare(specs);
}

nn::Var Conv2dBlock::operator()(const ParameterStore& p,
                                const nn::Var& x) const {
  return act(p, conv(p, x));
}

Deconv2dBlock::Deconv2dBlock(const std::string& name, int64_t in, int64_t out)
    : conv{name + ".deconv", in, out, 3, 3, {}}, act{name + ".norm", out} {
  conv.opt.stride = {1, 2};
  conv.opt.padding = {1, 1};
}

void Deconv2dBlock::Declare(ParamSpecs& specs) const {
  conv.Declare(specs);
  act.Declare(specs);
}

nn::Var Deconv2dBlock::operator()(const ParameterStore& p, const nn::Var& x,
                                  std::array<int64_t, 2> out_size) const {
  return act(p, conv(p, x, out_size));
}

DenseBlock::DenseBlock(const std::string& name, int64_t in, int64_t out) {
  nn::ConvOptions same;
  same.padding = {1, 1};
  for (int i = 0; i < kLayers; ++i)
    layers.emplace_back(name + ".layer" + std::to_string(i), in + i * kGrowth,
                        kGrowth, std::array<int64_t, 2>{3, 3}, same);
  transition = Conv2dBlock(name + ".transition", in + kLayers * kGrowth, out,
                           {1, 1}, nn::ConvOptions{});
}

void DenseBlock::Declare(ParamSpecs& specs) const {
  for (const auto& l : layers) l.Declare(specs);
  transition.Declare(specs);
}

nn::Var DenseBlock::operator()(const ParameterStore& p,
                               const nn::Var& x) const {
  std::vector<nn::Var> features{x};
  for (const auto& layer : layers) {
    nn::Var input = features.size() == 1 ? x : nn::Concat(features);
    features.push_back(layer(p, input));
  }
  return transition(p, nn::Concat(features));
}

LcaModule::LcaModule(const std::string& n, int64_t c, double factor)
    : name(n), channels(c) {
  reduced = std::max<int64_t>(1, std::llround(c / factor));
  global_reduce = {n + ".ga.reduce", c, reduced, 1, 1, {}, false};
  global_expand = {n + ".ga.expand", reduced, c, 1, 1, {}, true};
  nn::ConvOptions dw;
  dw.padding = {kLocalKernel / 2, 0};
  dw.groups = c;
  local_depthwise = {n + ".la.depthwise", c, c, kLocalKernel, 1, dw, false};
  local_pointwise = {n + ".la.pointwise", c, c, 1, 1, {}, true};
}

void LcaModule::Declare(ParamSpecs& specs) const {
  global_reduce.Declare(specs);
  specs.push_back({name + ".ga.slope", {reduced}, InitKind::kConstant, 0.25});
  global_expand.Declare(specs);
  local_depthwise.Declare(specs);
  local_pointwise.Declare(specs);
}

nn::Var LcaModule::operator()(const ParameterStore& p,
                              const nn::Var& x) const {
  nn::Var pooled = nn::Reshape(nn::GlobalAvgPool(x), {channels, 1, 1});
  nn::Var hidden = nn::PRelu(global_reduce(p, pooled), Param(p, name + ".ga.slope"));
  nn::Var global_gates =
      nn::Reshape(nn::Sigmoid(global_expand(p, hidden)), {channels});
  nn::Var local_gates =
      nn::Sigmoid(local_pointwise(p, local_depthwise(p, x)));
  nn::Var gates = nn::Scale(nn::AddChannel(local_gates, global_gates), 0.5);
  return nn::Mul(x, gates);
}

void LcaModule::SetUnitGates(ParameterStore& p) const {
  for (const Conv2dLayer* layer : {&global_expand, &local_pointwise}) {
    p.MutableValue(layer->name + ".weight").Fill(0.0);
    p.MutableValue(layer->name + ".bias").Fill(kUnitGateBias);
  }
}

TcnBlock::TcnBlock(const std::string& name, int64_t channels, int64_t hidden,
                   int64_t dilation)
    : in_proj{name + ".in_proj", channels, hidden, 1, 1, {}, false},
      in_act{name + ".in_norm", hidden},
      mid_act{name + ".mid_norm", hidden},
      out_proj{name + ".out_proj", hidden, channels, 1, 1, {}, false} {
  nn::ConvOptions dw;
  dw.dilation = {dilation, 1};
  dw.padding = {dilation, 0};
  dw.groups = hidden;
  depthwise = {name + ".depthwise", hidden, hidden, 3, 1, dw, false};
}

void TcnBlock::Declare(ParamSpecs& specs) const {
  in_proj.Declare(specs);
  in_act.Declare(specs);
  depthwise.Declare(specs);
  mid_act.Declare(specs);
  out_proj.Declare(specs);
}

nn::Var TcnBlock::operator()(const ParameterStore& p, const nn::Var& x) const {
  nn::Var h = in_act(p, in_proj(p, x));
  h = mid_act(p, depthwise(p, h));
  return nn::Add(x, out_proj(p, h));
}

PyramidBlock::PyramidBlock(const std::string& name, int64_t channels) {
  const int64_t width = std::max<int64_t>(1, channels / 4);
  for (size_t i = 0; i < kScales.size(); ++i)
    branches.push_back({name + ".branch" + std::to_string(kScales[i]),
                        channels, width, 1, 1, {}, false});
  fuse = Conv2dBlock(name + ".fuse",
                     channels + width * static_cast<int64_t>(kScales.size()),
                     channels, {1, 1}, nn::ConvOptions{});
}

void PyramidBlock::Declare(ParamSpecs& specs) const {
  for (const auto& b : branches) b.Declare(specs);
  fuse.Declare(specs);
}

nn::Var PyramidBlock::operator()(const ParameterStore& p,
                                 const nn::Var& x) const {
  const int64_t T = x.dim(1), F = x.dim(2);
  std::vector<nn::Var> parts{x};
  for (size_t i = 0; i < branches.size(); ++i) {
    nn::Var pooled = nn::AdaptiveAvgPool(x, kScales[i], kScales[i]);
    parts.push_back(nn::UpsampleNearest(branches[i](p, pooled), T, F));
  }
  return fuse(p, nn::Concat(parts));
}

}  // namespace pse
