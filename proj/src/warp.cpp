#include "depthgan/warp.hpp"

#include <cmath>

namespace depthgan {

namespace {

Var per_sample_const(const std::vector<Scalar>& v) {
  Tensor t(Shape(static_cast<int>(v.size()), 1, 1, 1));
  t.v.assign(v.begin(), v.end());
  return constant(std::move(t));
}

}  // namespace

WarpGraph backward_warp_graph(const Var& src_rgb, const Var& src_depth,
                              const Var& tgt_depth, const CameraIntrinsics& k,
                              const std::vector<Scalar>& theta1,
                              const std::vector<Scalar>& theta2,
                              const std::vector<Vec3>& pivots) {
  k.validate();
  const Shape ds = tgt_depth->val.shape;
  const int N = ds.n, H = ds.h, W = ds.w;
  check_arg(ds.c == 1 && H == k.height && W == k.width,
            "backward_warp_graph: target depth must be [N,1,H,W] matching K");
  check_arg(src_depth->val.shape == ds,
            "backward_warp_graph: source depth shape mismatch");
  if (src_rgb)
    check_arg(src_rgb->val.shape == Shape(N, 3, H, W),
              "backward_warp_graph: source rgb shape mismatch");
  check_arg(static_cast<int>(theta1.size()) == N &&
                static_cast<int>(theta2.size()) == N &&
                static_cast<int>(pivots.size()) == N,
            "backward_warp_graph: need one angle pair and pivot per sample");

  // Unprojection ray directions, constant over the batch.
  Tensor kxt(Shape(1, 1, H, W)), kyt(Shape(1, 1, H, W));
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      kxt.at(0, 0, y, x) = (x - k.cx) / k.fx;
      kyt.at(0, 0, y, x) = (y - k.cy) / k.fy;
    }
  const Var kx = constant(std::move(kxt));
  const Var ky = constant(std::move(kyt));

  std::vector<Scalar> ca(N), sa(N), px(N), pz(N);
  for (int n = 0; n < N; ++n) {
    const Scalar alpha = theta1[n] - theta2[n];  // target -> source frame
    ca[n] = std::cos(alpha);
    sa[n] = std::sin(alpha);
    px[n] = pivots[n].x;
    pz[n] = pivots[n].z;
  }
  const Var vca = per_sample_const(ca), vsa = per_sample_const(sa);
  const Var vpx = per_sample_const(px), vpz = per_sample_const(pz);

  // Unproject the target view and rotate into the source frame (y axis).
  const Var x2 = mul(kx, tgt_depth);
  const Var y2 = mul(ky, tgt_depth);
  const Var z2 = tgt_depth;
  const Var dx = sub(x2, vpx);
  const Var dz = sub(z2, vpz);
  const Var x1 = add(add(mul(vca, dx), mul(vsa, dz)), vpx);
  const Var z1 = add(sub(mul(vca, dz), mul(vsa, dx)), vpz);
  const Var y1 = y2;

  const Var z1_div = clamp_away_from_zero(z1, 1e-9);
  const Var u1 = add_scalar(scale(div(x1, z1_div), k.fx), k.cx);
  const Var v1 = add_scalar(scale(div(y1, z1_div), k.fy), k.cy);

  // Validity: transformed z positive and the source coordinate in bounds.
  Tensor mask(Shape(N, 1, H, W));
  for (int64_t i = 0; i < mask.numel(); ++i) {
    const Scalar zz = z1->val.v[i];
    const Scalar uu = u1->val.v[i];
    const Scalar vv = v1->val.v[i];
    mask.v[i] =
        (zz > 0 && uu >= 0 && uu <= W - 1 && vv >= 0 && vv <= H - 1) ? 1.0 : 0.0;
  }
  const Var vmask = constant(mask);

  WarpGraph out;
  out.mask = mask;

  // Sampled source depth carried back into the target frame.
  const Var d1 = grid_sample(src_depth, u1, v1);
  const Var xs = mul(scale(add_scalar(u1, -k.cx), 1.0 / k.fx), d1);
  const Var zhat =
      add(add(mul(vsa, sub(xs, vpx)), mul(vca, sub(d1, vpz))), vpz);
  out.depth = mul(zhat, vmask);

  if (src_rgb) out.rgb = mul(grid_sample(src_rgb, u1, v1), vmask);
  return out;
}

}  // namespace depthgan
