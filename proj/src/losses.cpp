#include "depthgan/losses.hpp"

#include <cmath>

namespace depthgan {

namespace {

void check_finite(const Var& x, const char* what) {
  for (const Scalar v : x->val.v)
    check_runtime(std::isfinite(v), std::string(what) + ": non-finite value");
}

}  // namespace

void LossWeights::validate() const {
  check_arg(lambda1 >= 0 && lambda2 >= 0 && lambda3 >= 0 && lambda4 >= 0 &&
                r1_weight >= 0,
            "LossWeights: weights must be nonnegative");
}

Var adversarial_d(const Var& real_logits, const Var& fake_logits) {
  check_finite(real_logits, "adversarial_d(real)");
  check_finite(fake_logits, "adversarial_d(fake)");
  return add(mean_all(softplus(neg(real_logits))), mean_all(softplus(fake_logits)));
}

Var adversarial_g(const Var& fake_logits) {
  check_finite(fake_logits, "adversarial_g");
  return mean_all(softplus(neg(fake_logits)));
}

Var masked_l1(const Var& a, const Var& b, const Tensor& mask) {
  const Shape& s = a->val.shape;
  check_arg(s == b->val.shape, "masked_l1: shape mismatch " + s.str() + " vs " +
                                   b->val.shape.str());
  check_arg(mask.shape == Shape(s.n, 1, s.h, s.w),
            "masked_l1: mask must be [N,1,H,W], got " + mask.shape.str());
  Scalar mask_sum = 0;
  for (const Scalar m : mask.v) mask_sum += m;
  const Scalar denom = std::max(1.0, mask_sum * s.c);
  const Var diff = mul(abs(sub(a, b)), constant(mask));
  return scale(sum_all(diff), 1.0 / denom);
}

Tensor quantize_depth(const Tensor& depth, int k, Scalar near, Scalar far,
                      int64_t* clamped) {
  check_arg(k >= 2, "quantize_depth: need at least 2 classes");
  check_arg(far > near && near > 0, "quantize_depth: need 0 < near < far");
  Tensor out(depth.shape);
  int64_t clamp_count = 0;
  for (int64_t i = 0; i < depth.numel(); ++i) {
    const Scalar d = depth.v[i];
    if (d < near || d > far) ++clamp_count;
    const Scalar t = (std::min(std::max(d, near), far) - near) / (far - near);
    const int cls = std::min(k - 1, static_cast<int>(std::floor(t * k)));
    out.v[i] = static_cast<Scalar>(cls);
  }
  if (clamped) *clamped += clamp_count;
  return out;
}

Var depth_ce(const Var& logits, const Tensor& target_classes) {
  return cross_entropy_mean(logits, constant(target_classes));
}

RotationLosses rotation_losses(const Var& view1_rgb, const Var& view1_depth,
                               const Var& view2_rgb, const Var& view2_depth,
                               const CameraIntrinsics& k,
                               const std::vector<Scalar>& theta1,
                               const std::vector<Scalar>& theta2,
                               const std::vector<Vec3>& pivots, Scalar near,
                               Scalar far) {
  check_arg(far > near, "rotation_losses: need near < far");
  const WarpGraph warped = backward_warp_graph(view1_rgb, view1_depth,
                                               view2_depth, k, theta1, theta2,
                                               pivots);
  const Scalar inv_range = 1.0 / (far - near);
  auto normalize = [&](const Var& d) {
    return scale(add_scalar(d, -near), inv_range);
  };
  RotationLosses out;
  out.mask = warped.mask;
  out.depth = masked_l1(normalize(warped.depth), normalize(view2_depth),
                        warped.mask);
  if (view1_rgb) {
    check_arg(view2_rgb != nullptr, "rotation_losses: view2 rgb missing");
    out.rgb = masked_l1(warped.rgb, view2_rgb, warped.mask);
  }
  return out;
}

Var r1_penalty_from_scores(const Var& score_sum,
                           const std::vector<Var>& input_leaves, Scalar weight) {
  check_arg(!input_leaves.empty(), "r1_penalty: no input leaves");
  const int batch = input_leaves[0]->val.shape.n;
  GradMap grads = backward(score_sum);
  Var acc;
  for (const Var& input : input_leaves) {
    auto it = grads.find(input.get());
    check_runtime(it != grads.end(),
                  "r1_penalty: score does not depend on an input leaf");
    const Var sq = reduce_sum_to(square(it->second), Shape(1, 1, 1, 1));
    acc = acc ? add(acc, sq) : sq;
  }
  return scale(acc, weight / (2.0 * batch));
}

Var r1_penalty(const Discriminator& d, const Tensor& real_rgb,
               const Tensor& real_depth, Scalar weight) {
  const Var rgb = leaf(real_rgb);
  const Var depth = leaf(real_depth);
  SwitchableInput input;
  input.rgb = rgb;
  input.depth = depth;
  const Var scores = d.score(input);
  return r1_penalty_from_scores(sum_all(scores), {rgb, depth}, weight);
}

TotalLosses totals(const Var& adv_g, const Var& adv_d, const Var& d_rot,
                   const Var& rgb_rot, const Var& f_dp, const Var& r_dp,
                   const LossWeights& weights) {
  weights.validate();
  for (const Var& v : {adv_g, adv_d, d_rot, rgb_rot, f_dp, r_dp})
    check_runtime(std::isfinite(v->val.item()), "totals: non-finite component");
  TotalLosses out;
  out.l_gd = add(adv_g, scale(d_rot, weights.lambda1));
  out.l_grgb = add(adv_g, add(scale(rgb_rot, weights.lambda2),
                              scale(f_dp, weights.lambda3)));
  out.l_d = add(adv_d, scale(r_dp, weights.lambda4));
  return out;
}

}  // namespace depthgan
