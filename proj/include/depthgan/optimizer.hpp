#pragma once

#include <cstdint>

#include "depthgan/nn.hpp"

namespace depthgan {

struct AdamConfig {
  Scalar lr = 1.5e-3;
  Scalar beta1 = 0.0;
  Scalar beta2 = 0.99;
  Scalar eps = 1e-8;
};

// Adam over one parameter group. Parameters absent from a step's gradient map
// are treated as zero-gradient (their moments still decay).
class Adam {
 public:
  Adam() = default;
  Adam(ParamList params, AdamConfig cfg);

  void step(const GradMap& grads);

  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  const ParamList& params() const { return params_; }
  Tensor& moment1(size_t i) { return m_[i]; }
  Tensor& moment2(size_t i) { return v_[i]; }

 private:
  AdamConfig cfg_;
  ParamList params_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

}  // namespace depthgan
