// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Building blocks of the backbone. Each layer knows the names and shapes
// of its parameters (Declare) and evaluates against a ParameterStore.

#pragma once

#include <string>
#include <vector>

#include "pse/model/params.h"
#include "pse/nn/ops.h"

namespace pse {

enum class InitKind { kFanInUniform, kZeros, kOnes, kConstant };

struct ParamSpec {
  std::string name;
  nn::Shape shape;
  InitKind init = InitKind::kFanInUniform;
  double value = 0.0;   // fan-in for kFanInUniform, constant for kConstant
};

using ParamSpecs = std::vector<ParamSpec>;

// Sigmoid of this bias is exactly 1.0 in double precision.
inline constexpr double kUnitGateBias = 40.0;

struct Conv2dLayer {
  std::string name;
  int64_t in = 0, out = 0;
  int64_t k_t = 1, k_f = 1;
  nn::ConvOptions opt;
  bool gate_bias = false;  // zero-initialized bias feeding a sigmoid

  void Declare(ParamSpecs& specs) const;
  nn::Var operator()(const ParameterStore& p, const nn::Var& x) const;
};

struct DeconvLayer {
  std::string name;
  int64_t in = 0, out = 0;
  int64_t k_t = 3, k_f = 3;
  nn::ConvOptions opt;

  void Declare(ParamSpecs& specs) const;
  nn::Var operator()(const ParameterStore& p, const nn::Var& x,
                     std::array<int64_t, 2> out_size) const;
};

// Per-channel layer normalization followed by PReLU.
struct NormAct {
  std::string name;
  int64_t channels = 0;

  void Declare(ParamSpecs& specs) const;
  nn::Var operator()(const ParameterStore& p, const nn::Var& x) const;
};

// conv -> norm -> PReLU
struct Conv2dBlock {
  Conv2dLayer conv;
  NormAct act;

  Conv2dBlock() = default;
  Conv2dBlock(const std::string& name, int64_t in, int64_t out,
              std::array<int64_t, 2> kernel, nn::ConvOptions opt);
  void Declare(ParamSpecs& specs) const;
  nn::Var operator()(const ParameterStore& p, const nn::Var& x) const;
};

// transposed conv -> norm -> PReLU
struct Deconv2dBlock {
  DeconvLayer conv;
  NormAct act;

  Deconv2dBlock() = default;
  Deconv2dBlock(const std::string& name, int64_t in, int64_t out);
  void Declare(ParamSpecs& specs) const;
  nn::Var operator()(const ParameterStore& p, const nn::Var& x,
                     std::array<int64_t, 2> out_size) const;
};

// Four densely connected 3x3 conv layers (growth 8) and a 1x1 transition
// to `out` channels.
struct DenseBlock {
  static constexpr int kLayers = 4;
  static constexpr int64_t kGrowth = 8;

  std::vector<Conv2dBlock> layers;
  Conv2dBlock transition;

  DenseBlock() = default;
  DenseBlock(const std::string& name, int64_t in, int64_t out);
  void Declare(ParamSpecs& specs) const;
  nn::Var operator()(const ParameterStore& p, const nn::Var& x) const;
};

// Local-global context aggregation: feat * (global_gates + local_gates) / 2.
// Global gates: pooled channels -> 1x1 bottleneck -> PReLU -> 1x1 -> sigmoid.
// Local gates: depthwise temporal conv (kernel 7) -> 1x1 -> sigmoid.
struct LcaModule {
  static constexpr int64_t kLocalKernel = 7;

  std::string name;
  int64_t channels = 0;
  int64_t reduced = 0;
  Conv2dLayer global_reduce, global_expand;
  Conv2dLayer local_depthwise, local_pointwise;

  LcaModule() = default;
  LcaModule(const std::string& name, int64_t channels, double factor);
  void Declare(ParamSpecs& specs) const;
  nn::Var operator()(const ParameterStore& p, const nn::Var& x) const;
  // Forces both gate branches to exactly 1 so the module is the identity.
  void SetUnitGates(ParameterStore& p) const;
};

// Residual block over frames of a [D, T, 1] map: 1x1 -> PReLU/norm ->
// dilated depthwise conv -> PReLU/norm -> 1x1, added to the input.
struct TcnBlock {
  Conv2dLayer in_proj;
  NormAct in_act;
  Conv2dLayer depthwise;
  NormAct mid_act;
  Conv2dLayer out_proj;

  TcnBlock() = default;
  TcnBlock(const std::string& name, int64_t channels, int64_t hidden,
           int64_t dilation);
  void Declare(ParamSpecs& specs) const;
  nn::Var operator()(const ParameterStore& p, const nn::Var& x) const;
};

// Input plus four pooled branches (scales 1, 2, 4, 8), each a 1x1 conv
// upsampled back to full size; concatenated and fused by a 1x1 block.
struct PyramidBlock {
  static constexpr std::array<int64_t, 4> kScales{1, 2, 4, 8};

  std::vector<Conv2dLayer> branches;
  Conv2dBlock fuse;

  PyramidBlock() = default;
  PyramidBlock(const std::string& name, int64_t channels);
  void Declare(ParamSpecs& specs) const;
  nn::Var operator()(const ParameterStore& p, const nn::Var& x) const;
};

}  // namespace pse
