#include "depthgan/nn.hpp"

#include <cmath>

namespace depthgan {

void set_requires_grad(ParamList& params, bool value) {
  for (auto& p : params) p.var->requires_grad = value;
}

EqualizedConv EqualizedConv::create(Rng& rng, int ci, int co, int k, int stride,
                                    int pad, Scalar lr_mul, bool with_bias,
                                    Scalar bias_init) {
  check_arg(ci > 0 && co > 0 && k > 0, "EqualizedConv: bad dimensions");
  EqualizedConv conv;
  Tensor w = Tensor::randn(Shape(co, ci, k, k), rng);
  for (auto& v : w.v) v /= lr_mul;
  conv.weight = leaf(std::move(w));
  if (with_bias) {
    Tensor b = Tensor::full(Shape(1, co, 1, 1), bias_init / lr_mul);
    conv.bias = leaf(std::move(b));
  }
  conv.weight_scale = 1.0 / std::sqrt(static_cast<Scalar>(ci) * k * k);
  conv.lr_mul = lr_mul;
  conv.stride = stride;
  conv.pad = pad;
  return conv;
}

Var EqualizedConv::forward(const Var& x) const {
  Var y = conv2d(x, scale(weight, weight_scale * lr_mul), stride, pad);
  if (bias) y = add(y, scale(bias, lr_mul));
  return y;
}

void EqualizedConv::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias) out.push_back({prefix + ".bias", bias});
}

ModulatedConv ModulatedConv::create(Rng& rng, int style_dim, int ci, int co,
                                    int k, bool demodulate) {
  ModulatedConv conv;
  conv.affine = EqualizedConv::create(rng, style_dim, ci, 1, 1, 0, 1.0, true,
                                      /*bias_init=*/1.0);
  conv.weight = leaf(Tensor::randn(Shape(co, ci, k, k), rng));
  conv.bias = leaf(Tensor::zeros(Shape(1, co, 1, 1)));
  conv.weight_scale = 1.0 / std::sqrt(static_cast<Scalar>(ci) * k * k);
  conv.pad = k / 2;
  conv.demodulate = demodulate;
  return conv;
}

Var ModulatedConv::forward(const Var& x, const Var& style) const {
  const Shape ws = weight->val.shape;
  const Var s = affine.forward(style);  // [N,Ci,1,1]
  check_arg(s->val.shape.c == ws.c,
            "ModulatedConv: style affine output does not match input channels");
  const Var wk = scale(weight, weight_scale);
  Var y = conv2d(mul(x, s), wk, 1, pad);
  if (demodulate) {
    // dinv[n,o] = 1/sqrt(sum_{i,k} (w[o,i,k] s[n,i])^2 + eps), as a 1x1 conv
    // of s^2 with the kernel-summed squared weights.
    const Var w2 = reduce_sum_to(square(wk), Shape(ws.n, ws.c, 1, 1));
    const Var d2 = conv2d(square(s), w2, 1, 0);  // [N,Co,1,1]
    y = mul(y, pow_scalar(add_scalar(d2, 1e-8), -0.5));
  }
  return add(y, bias);
}

void ModulatedConv::collect(const std::string& prefix, ParamList& out) const {
  affine.collect(prefix + ".affine", out);
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

NoiseInject NoiseInject::create() {
  NoiseInject n;
  n.strength = leaf(Tensor::zeros(Shape(1, 1, 1, 1)));
  return n;
}

Var NoiseInject::forward(const Var& x, const Tensor& noise) const {
  check_arg(noise.shape.n == x->val.shape.n && noise.shape.c == 1 &&
                noise.shape.h == x->val.shape.h && noise.shape.w == x->val.shape.w,
            "NoiseInject: noise must be [N,1,H,W] matching the features");
  return add(x, mul(constant(noise), strength));
}

void NoiseInject::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".strength", strength});
}

MappingNetwork MappingNetwork::create(Rng& rng, int dim, int n_layers,
                                      Scalar lr_mul) {
  check_arg(n_layers >= 1, "MappingNetwork: need at least one layer");
  MappingNetwork m;
  for (int i = 0; i < n_layers; ++i)
    m.layers.push_back(EqualizedConv::create(rng, dim, dim, 1, 1, 0, lr_mul));
  return m;
}

Var MappingNetwork::forward(const Var& z) const {
  Var x = pixel_norm(z);
  for (const auto& layer : layers)
    x = leaky_relu(layer.forward(x), kLeakySlope, leaky_gain());
  return x;
}

void MappingNetwork::collect(const std::string& prefix, ParamList& out) const {
  for (size_t i = 0; i < layers.size(); ++i)
    layers[i].collect(prefix + "." + std::to_string(i), out);
}

Var pixel_norm(const Var& x) {
  const Shape& s = x->val.shape;
  Var ms = scale(reduce_sum_to(square(x), Shape(s.n, 1, s.h, s.w)),
                 1.0 / static_cast<Scalar>(s.c));
  return mul(x, pow_scalar(add_scalar(ms, 1e-8), -0.5));
}

}  // namespace depthgan
