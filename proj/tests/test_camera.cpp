#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "depthgan/camera.hpp"
#include "depthgan/toy_scenes.hpp"
#include "depthgan/warp.hpp"
#include "test_util.hpp"

using namespace depthgan;
using doctest::Approx;

namespace {

RgbdImage random_rgbd(int h, int w, Scalar near, Scalar far, Rng& rng) {
  RgbdImage img;
  img.rgb = Tensor(Shape(1, 3, h, w));
  for (auto& v : img.rgb.v) v = rng.uniform(-1, 1);
  img.depth = DepthMap::filled(h, w, 0, near, far);
  for (auto& v : img.depth.values.v) v = rng.uniform(near, far);
  return img;
}

}  // namespace

TEST_CASE("intrinsics_from_focal") {
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 128, 128);
  CHECK(k.fx == Approx(26.0 / 36.0 * 128).epsilon(1e-12));
  CHECK(k.fx == Approx(92.444).epsilon(1e-4));
  CHECK(k.fy == k.fx);
  CHECK(k.cx == 64);
  CHECK(k.cy == 64);

  CHECK(intrinsics_from_focal(36, 36, 128, 128).fx == Approx(128));
  CHECK(intrinsics_from_focal(26, 36, 256, 256).fx == Approx(184.889).epsilon(1e-4));
  CHECK_THROWS_AS(intrinsics_from_focal(-1, 36, 128, 128), std::invalid_argument);
  CHECK_THROWS_AS(intrinsics_from_focal(26, 0, 128, 128), std::invalid_argument);
}

TEST_CASE("unproject basics and brute-force oracle") {
  CameraIntrinsics k = intrinsics_from_focal(26, 36, 8, 8);
  Rng rng(11);
  DepthMap d = DepthMap::filled(8, 8, 2.0, 0.5, 10.0);
  auto pts = unproject(d, k);
  // principal point at d=2 -> (0,0,2); note cx=4 is a pixel index here
  const int pp = 4 * 8 + 4;
  CHECK(pts[pp].x == Approx(0));
  CHECK(pts[pp].y == Approx(0));
  CHECK(pts[pp].z == Approx(2));

  for (auto& v : d.values.v) v = rng.uniform(0.5, 10.0);
  pts = unproject(d, k);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const Scalar dd = d.at(y, x);
      const Vec3& p = pts[y * 8 + x];
      CHECK(p.x == Approx((x - k.cx) * dd / k.fx).epsilon(1e-9));
      CHECK(p.y == Approx((y - k.cy) * dd / k.fy).epsilon(1e-9));
      CHECK(p.z == Approx(dd).epsilon(1e-12));
    }

  DepthMap wrong = DepthMap::filled(4, 8, 1.0, 0.5, 10.0);
  CHECK_THROWS_AS(unproject(wrong, k), std::invalid_argument);
}

TEST_CASE("unit offset unprojection") {
  // pixel (cx+fx, cy) at depth 1 -> (1, 0, 1)
  CameraIntrinsics k;
  k.fx = k.fy = 4;
  k.cx = k.cy = 4;
  k.width = k.height = 9;
  DepthMap d = DepthMap::filled(9, 9, 1.0, 0.5, 10.0);
  const auto pts = unproject(d, k);
  const Vec3& p = pts[4 * 9 + 8];  // (u,v) = (cx+fx, cy) = (8,4)
  CHECK(p.x == Approx(1));
  CHECK(p.y == Approx(0));
  CHECK(p.z == Approx(1));
}

TEST_CASE("central_axis_transform pins the rotation convention") {
  RotationSpec spec;
  spec.pivot = {0, 0, 2};

  SUBCASE("identity at zero rotation") {
    spec.theta1 = spec.theta2 = 0.3;
    const auto t = central_axis_transform(spec);
    const Vec3 p = t.apply({1.2, -0.5, 3.4});
    CHECK(p.x == Approx(1.2));
    CHECK(p.y == Approx(-0.5));
    CHECK(p.z == Approx(3.4));
  }
  SUBCASE("pivot is a fixpoint for any rotation") {
    spec.theta1 = -0.2;
    spec.theta2 = 0.25;
    const auto t = central_axis_transform(spec);
    const Vec3 p = t.apply(spec.pivot);
    CHECK(p.x == Approx(0).epsilon(1e-12));
    CHECK(p.y == Approx(0).epsilon(1e-12));
    CHECK(p.z == Approx(2).epsilon(1e-12));
  }
  SUBCASE("+90 degrees about the pivot sends (0,0,3) to (1,0,2)") {
    spec.theta1 = 0;
    spec.theta2 = kPi / 2;
    const auto t = central_axis_transform(spec);
    const Vec3 p = t.apply({0, 0, 3});
    CHECK(p.x == Approx(1).epsilon(1e-12));
    CHECK(p.y == Approx(0).epsilon(1e-12));
    CHECK(p.z == Approx(2).epsilon(1e-12));
  }
}

TEST_CASE("backward_warp identity") {
  Rng rng(5);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 16, 16);
  const RgbdImage img = random_rgbd(16, 16, 0.5, 10.0, rng);
  RotationSpec spec;
  spec.theta1 = spec.theta2 = deg_to_rad(7.0);
  spec.pivot = {0, 0, mean_depth(img.depth)};
  const WarpResult res = backward_warp(img, img.depth, k, spec);
  for (const Scalar m : res.mask.v) CHECK(m == 1.0);
  CHECK(testutil::max_abs_diff(res.rgbd.rgb, img.rgb) < 1e-10);
  CHECK(testutil::max_abs_diff(res.rgbd.depth.values, img.depth.values) < 1e-10);
}

TEST_CASE("backward_warp equals the per-pixel scalar oracle") {
  Rng rng(17);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 16, 16);
  for (const Scalar deg : {-15.0, -5.0, 5.0, 15.0}) {
    const RgbdImage src = random_rgbd(16, 16, 0.5, 10.0, rng);
    DepthMap tgt = DepthMap::filled(16, 16, 0, 0.5, 10.0);
    for (auto& v : tgt.values.v) v = rng.uniform(0.5, 10.0);
    RotationSpec spec;
    spec.theta1 = rng.uniform(-0.1, 0.1);
    spec.theta2 = spec.theta1 + deg_to_rad(deg);
    spec.pivot = {0, 0, mean_depth(src.depth)};
    const WarpResult got = backward_warp(src, tgt, k, spec);
    const WarpResult ref = testutil::warp_scalar_oracle(src, tgt, k, spec);
    CHECK(testutil::max_abs_diff(got.mask, ref.mask) == 0.0);
    CHECK(testutil::max_abs_diff(got.rgbd.rgb, ref.rgbd.rgb) < 1e-9);
    CHECK(testutil::max_abs_diff(got.rgbd.depth.values, ref.rgbd.depth.values) < 1e-9);
  }
}

TEST_CASE("out-of-bounds reprojections get mask 0 and fill 0") {
  Rng rng(3);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 16, 16);
  const RgbdImage src = random_rgbd(16, 16, 0.5, 10.0, rng);
  // constant-depth plane rotated hard enough that edge columns leave the frame
  const DepthMap tgt = DepthMap::filled(16, 16, 5.0, 0.5, 10.0);
  RotationSpec spec;
  spec.theta1 = 0;
  spec.theta2 = deg_to_rad(25.0);
  spec.pivot = {0, 0, 5.0};
  const WarpResult res = backward_warp(src, tgt, k, spec);
  int invalid = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      if (res.mask.at(0, 0, y, x) == 0.0) {
        ++invalid;
        CHECK(res.rgbd.depth.at(y, x) == 0.0);
        for (int c = 0; c < 3; ++c) CHECK(res.rgbd.rgb.at(0, c, y, x) == 0.0);
      }
  CHECK(invalid > 0);
  CHECK(invalid < 16 * 16);
}

TEST_CASE("mask monotonicity on a fronto-parallel plane") {
  Rng rng(9);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 32, 32);
  const RgbdImage src = random_rgbd(32, 32, 0.5, 10.0, rng);
  const DepthMap tgt = DepthMap::filled(32, 32, 4.0, 0.5, 10.0);
  int prev = 32 * 32 + 1;
  bool first = true;
  for (const Scalar deg : {0.0, 3.0, 6.0, 9.0, 12.0, 15.0}) {
    RotationSpec spec;
    spec.theta1 = 0;
    spec.theta2 = deg_to_rad(deg);
    spec.pivot = {0, 0, 4.0};
    const WarpResult res = backward_warp(src, tgt, k, spec);
    int valid = 0;
    for (const Scalar m : res.mask.v) valid += m > 0 ? 1 : 0;
    if (first) {
      CHECK(valid == 32 * 32);  // full mask at zero rotation
      first = false;
    }
    CHECK(valid <= prev);
    prev = valid;
  }
}

TEST_CASE("graph warp agrees with the tensor warp and its gradients check") {
  Rng rng(23);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 12, 12);
  const RgbdImage src = random_rgbd(12, 12, 0.5, 10.0, rng);
  DepthMap tgt = DepthMap::filled(12, 12, 0, 0.5, 10.0);
  // smooth target depth keeps finite differences off bilinear cell boundaries
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x)
      tgt.at(y, x) = 4.0 + 0.8 * std::sin(0.4 * x) + 0.5 * std::cos(0.5 * y);
  RotationSpec spec;
  spec.theta1 = deg_to_rad(-4.0);
  spec.theta2 = deg_to_rad(6.0);
  spec.pivot = {0, 0, 4.0};

  const WarpResult ref = backward_warp(src, tgt, k, spec);
  const WarpGraph graph = backward_warp_graph(
      constant(src.rgb), constant(src.depth.values), constant(tgt.values), k,
      {spec.theta1}, {spec.theta2}, {spec.pivot});
  CHECK(testutil::max_abs_diff(graph.mask, ref.mask) == 0.0);
  CHECK(testutil::max_abs_diff(graph.rgb->val, ref.rgbd.rgb) < 1e-9);
  CHECK(testutil::max_abs_diff(graph.depth->val, ref.rgbd.depth.values) < 1e-9);

  auto res = testutil::gradcheck(
      [&](const std::vector<Var>& l) {
        const WarpGraph w = backward_warp_graph(l[0], l[1], l[2], k,
                                                {spec.theta1}, {spec.theta2},
                                                {spec.pivot});
        return add(mean_all(square(w.rgb)), mean_all(square(w.depth)));
      },
      {src.rgb, src.depth.values, tgt.values}, 1e-6, 48);
  CHECK(res.max_rel_err < 1e-4);
}
