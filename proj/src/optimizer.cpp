#include "depthgan/optimizer.hpp"

#include <cmath>

namespace depthgan {

Adam::Adam(ParamList params, AdamConfig cfg) : cfg_(cfg), params_(std::move(params)) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Tensor::zeros(p.var->val.shape));
    v_.push_back(Tensor::zeros(p.var->val.shape));
  }
}

void Adam::step(const GradMap& grads) {
  ++t_;
  const Scalar c1 = 1.0 - std::pow(cfg_.beta1, static_cast<Scalar>(t_));
  const Scalar c2 = 1.0 - std::pow(cfg_.beta2, static_cast<Scalar>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].var->val;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    auto it = grads.find(params_[i].var.get());
    const Tensor* g = it != grads.end() ? &it->second->val : nullptr;
    for (int64_t j = 0; j < p.numel(); ++j) {
      const Scalar gj = g ? g->v[j] : 0.0;
      m.v[j] = cfg_.beta1 * m.v[j] + (1.0 - cfg_.beta1) * gj;
      v.v[j] = cfg_.beta2 * v.v[j] + (1.0 - cfg_.beta2) * gj * gj;
      const Scalar mhat = m.v[j] / c1;
      const Scalar vhat = v.v[j] / c2;
      p.v[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace depthgan
