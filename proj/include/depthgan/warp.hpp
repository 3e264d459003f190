#pragma once

#include <vector>

#include "depthgan/autodiff.hpp"
#include "depthgan/camera.hpp"

namespace depthgan {

// Differentiable batched version of backward_warp for the rotation
// consistency losses. Angles and pivots are per-sample constants; gradients
// flow into src_rgb, src_depth and tgt_depth (through both the sampled values
// and the sampling coordinates). The validity mask is not differentiated.
struct WarpGraph {
  Var rgb;      // [N,3,H,W], zero where mask is 0 (empty Var if src_rgb empty)
  Var depth;    // [N,1,H,W], zero where mask is 0
  Tensor mask;  // [N,1,H,W]
};

WarpGraph backward_warp_graph(const Var& src_rgb, const Var& src_depth,
                              const Var& tgt_depth, const CameraIntrinsics& k,
                              const std::vector<Scalar>& theta1,
                              const std::vector<Scalar>& theta2,
                              const std::vector<Vec3>& pivots);

}  // namespace depthgan
