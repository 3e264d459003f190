#pragma once

#include <cstdint>
#include <vector>

#include "depthgan/camera.hpp"
#include "depthgan/discriminator.hpp"
#include "depthgan/warp.hpp"

namespace depthgan {

struct LossWeights {
  Scalar lambda1 = 50.0;    // depth rotation consistency
  Scalar lambda2 = 0.3;     // rgb rotation consistency
  Scalar lambda3 = 1e-3;    // depth prediction on fakes
  Scalar lambda4 = 0.8;     // depth prediction on reals
  Scalar r1_weight = 0.3;

  void validate() const;
};

// Logit-form of the saturating adversarial losses:
//   L_adv^d = E[softplus(-real)] + E[softplus(fake)]
//   L_adv^g = E[softplus(-fake)]
// identical to the -log sigmoid formulation, stable at extreme logits.
Var adversarial_d(const Var& real_logits, const Var& fake_logits);
Var adversarial_g(const Var& fake_logits);

// sum(|a-b| * mask) / max(1, sum(mask) * channels); 0 on an empty mask.
// The mask broadcasts over channels; it is treated as a constant.
Var masked_l1(const Var& a, const Var& b, const Tensor& mask);

// Uniform binning of depth into k classes over [near, far]. Out-of-range
// values are clamped and counted into *clamped when provided.
Tensor quantize_depth(const Tensor& depth, int k, Scalar near, Scalar far,
                      int64_t* clamped = nullptr);

// Mean per-pixel cross-entropy of k-channel logits against a class map.
Var depth_ce(const Var& logits, const Tensor& target_classes);

// Both rotation-consistency terms for a generated pair that shares latent
// codes: view 1 is warped to theta2 and compared with view 2 under the warp
// validity mask. Depth is compared on the [0,1]-normalized scale.
struct RotationLosses {
  Var depth;   // L_rot^d
  Var rgb;     // L_rot^rgb (null when view1_rgb is null)
  Tensor mask;
};

RotationLosses rotation_losses(const Var& view1_rgb, const Var& view1_depth,
                               const Var& view2_rgb, const Var& view2_depth,
                               const CameraIntrinsics& k,
                               const std::vector<Scalar>& theta1,
                               const std::vector<Scalar>& theta2,
                               const std::vector<Vec3>& pivots, Scalar near,
                               Scalar far);

// R1 penalty (weight/2 * E ||d score / d input||^2) built with a second
// backward pass, so backward() through the result yields the parameter
// gradients of the penalty.
Var r1_penalty_from_scores(const Var& score_sum,
                           const std::vector<Var>& input_leaves, Scalar weight);
Var r1_penalty(const Discriminator& d, const Tensor& real_rgb,
               const Tensor& real_depth, Scalar weight);

// Eq. totals; R1 is applied separately in the discriminator update.
struct TotalLosses {
  Var l_gd;
  Var l_grgb;
  Var l_d;
};

TotalLosses totals(const Var& adv_g, const Var& adv_d, const Var& d_rot,
                   const Var& rgb_rot, const Var& f_dp, const Var& r_dp,
                   const LossWeights& weights);

}  // namespace depthgan
