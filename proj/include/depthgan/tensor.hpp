#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "depthgan/common.hpp"
#include "depthgan/rng.hpp"

namespace depthgan {

// All tensors are dense NCHW doubles. Vectors live as [N,C,1,1], scalars as
// [1,1,1,1]; there are no strides or views.
struct Shape {
  int n = 1, c = 1, h = 1, w = 1;

  Shape() = default;
  Shape(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {}

  int64_t numel() const {
    return static_cast<int64_t>(n) * c * h * w;
  }
  int dim(int i) const {
    switch (i) {
      case 0: return n;
      case 1: return c;
      case 2: return h;
      default: return w;
    }
  }
  void set_dim(int i, int v) {
    switch (i) {
      case 0: n = v; break;
      case 1: c = v; break;
      case 2: h = v; break;
      default: w = v; break;
    }
  }
  bool operator==(const Shape& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }
  std::string str() const {
    return "[" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + "]";
  }
};

struct Tensor {
  Shape shape;
  std::vector<Scalar> v;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), v(static_cast<size_t>(s.numel()), 0.0) {}
  Tensor(Shape s, Scalar fill)
      : shape(s), v(static_cast<size_t>(s.numel()), fill) {}

  static Tensor zeros(Shape s) { return Tensor(s); }
  static Tensor full(Shape s, Scalar x) { return Tensor(s, x); }
  static Tensor scalar(Scalar x) { return Tensor(Shape(1, 1, 1, 1), x); }
  static Tensor randn(Shape s, Rng& rng) {
    Tensor t(s);
    for (auto& x : t.v) x = rng.normal();
    return t;
  }

  int64_t numel() const { return shape.numel(); }

  Scalar& at(int n, int c, int h, int w) {
    return v[((static_cast<size_t>(n) * shape.c + c) * shape.h + h) * shape.w + w];
  }
  Scalar at(int n, int c, int h, int w) const {
    return v[((static_cast<size_t>(n) * shape.c + c) * shape.h + h) * shape.w + w];
  }

  Scalar* data() { return v.data(); }
  const Scalar* data() const { return v.data(); }

  // Value of a 1-element tensor.
  Scalar item() const {
    check_arg(numel() == 1, "Tensor::item: tensor has " +
                                std::to_string(numel()) + " elements");
    return v[0];
  }
};

}  // namespace depthgan
