#pragma once

#include <string>
#include <vector>

#include "depthgan/autodiff.hpp"
#include "depthgan/rng.hpp"

namespace depthgan {

struct ParamEntry {
  std::string name;
  Var var;
};
using ParamList = std::vector<ParamEntry>;

void set_requires_grad(ParamList& params, bool value);

// Equalized-learning-rate convolution: weights are stored N(0,1)/lr_mul and
// rescaled by lr_mul/sqrt(fan_in) at runtime. A 1x1 kernel on [N,C,1,1]
// doubles as a fully connected layer.
struct EqualizedConv {
  Var weight;  // [Co,Ci,k,k]
  Var bias;    // [1,Co,1,1]; null when bias-free
  Scalar weight_scale = 1;
  Scalar lr_mul = 1;
  int stride = 1, pad = 0;

  static EqualizedConv create(Rng& rng, int ci, int co, int k, int stride,
                              int pad, Scalar lr_mul = 1.0, bool with_bias = true,
                              Scalar bias_init = 0.0);
  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

// Style-modulated convolution (modulation + optional demodulation). The
// per-sample style scales the input channels, the optional demodulation
// rescales output channels by the inverse norm of the modulated kernel.
struct ModulatedConv {
  EqualizedConv affine;  // style vector -> per-input-channel scale, bias init 1
  Var weight;            // [Co,Ci,k,k]
  Var bias;              // [1,Co,1,1]
  Scalar weight_scale = 1;
  int pad = 0;
  bool demodulate = true;

  static ModulatedConv create(Rng& rng, int style_dim, int ci, int co, int k,
                              bool demodulate);
  Var forward(const Var& x, const Var& style) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct NoiseInject {
  Var strength;  // scalar, init 0

  static NoiseInject create();
  Var forward(const Var& x, const Tensor& noise) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

// z -> w mapping: pixel norm followed by equalized FC layers at lr_mul 0.01.
struct MappingNetwork {
  std::vector<EqualizedConv> layers;

  static MappingNetwork create(Rng& rng, int dim, int n_layers, Scalar lr_mul);
  Var forward(const Var& z) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

Var pixel_norm(const Var& x);

constexpr Scalar kLeakySlope = 0.2;
// sqrt(2) activation gain keeps feature magnitudes roughly unit through the
// equalized stacks.
inline Scalar leaky_gain() { return std::sqrt(2.0); }

}  // namespace depthgan
