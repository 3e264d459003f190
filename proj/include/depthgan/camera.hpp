#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "depthgan/tensor.hpp"

namespace depthgan {

struct Vec3 {
  Scalar x = 0, y = 0, z = 0;

  Vec3() = default;
  Vec3(Scalar x_, Scalar y_, Scalar z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(Scalar k) const { return {x * k, y * k, z * k}; }
  Scalar dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  Scalar norm() const { return std::sqrt(dot(*this)); }
};

// Pinhole camera. Convention throughout: camera looks down +z, x right,
// y down, right-handed; pixel (u,v) indexes columns/rows.
struct CameraIntrinsics {
  Scalar fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const;
};

// fx = fy = focal_mm / sensor_width_mm * width; principal point at the centre.
CameraIntrinsics intrinsics_from_focal(Scalar focal_mm, Scalar sensor_width_mm,
                                       int width, int height);

// Depth along the optical axis (z), in camera units.
struct DepthMap {
  Tensor values;  // [1,1,H,W]
  Scalar near = 0, far = 0;

  int h() const { return values.shape.h; }
  int w() const { return values.shape.w; }
  Scalar at(int y, int x) const { return values.at(0, 0, y, x); }
  Scalar& at(int y, int x) { return values.at(0, 0, y, x); }

  static DepthMap filled(int h, int w, Scalar value, Scalar near, Scalar far);
  void validate() const;
};

struct RgbdImage {
  Tensor rgb;  // [1,3,H,W] in [-1,1]
  DepthMap depth;

  int h() const { return rgb.shape.h; }
  int w() const { return rgb.shape.w; }
  void validate() const;
};

// Scene rotation about a vertical axis (parallel to camera y) through pivot.
struct RotationSpec {
  Scalar theta1 = 0, theta2 = 0;  // radians
  Vec3 pivot;
  Vec3 axis{0, 1, 0};

  void validate() const;
};

struct RigidTransform {
  std::array<std::array<Scalar, 3>, 3> rot{};
  Vec3 trans;

  Vec3 apply(const Vec3& p) const {
    return {rot[0][0] * p.x + rot[0][1] * p.y + rot[0][2] * p.z + trans.x,
            rot[1][0] * p.x + rot[1][1] * p.y + rot[1][2] * p.z + trans.y,
            rot[2][0] * p.x + rot[2][1] * p.y + rot[2][2] * p.z + trans.z};
  }
};

// Rotation matrix about a unit axis (Rodrigues).
std::array<std::array<Scalar, 3>, 3> axis_angle_matrix(const Vec3& axis,
                                                       Scalar angle);

// T(p) = R_axis(theta2 - theta1) (p - pivot) + pivot: maps camera-frame points
// of the theta1 view onto the theta2 view.
RigidTransform central_axis_transform(const RotationSpec& spec);

// Per-pixel unprojection (u,v,d) -> ((u-cx) d/fx, (v-cy) d/fy, d), row-major.
std::vector<Vec3> unproject(const DepthMap& depth, const CameraIntrinsics& k);

struct WarpResult {
  RgbdImage rgbd;
  Tensor mask;  // [1,1,H,W], entries 0/1

  void validate() const;
};

// Backward warp of `source` (view at theta1) into the theta2 frame, driven by
// the theta2 depth: each target pixel is unprojected with target_depth,
// carried into the source frame, and bilinearly sampled there. The warped
// depth channel is the sampled source depth mapped through the rotation back
// into the target frame, so a perfect pair reproduces the target view.
// Pixels whose source coordinate leaves the image (or whose transformed z is
// non-positive) get mask 0 and value 0.
WarpResult backward_warp(const RgbdImage& source, const DepthMap& target_depth,
                         const CameraIntrinsics& k, const RotationSpec& spec);

// Mean of a depth map (the default pivot z when no ground truth is known).
Scalar mean_depth(const DepthMap& d);

// Clamp-to-edge bilinear lookup shared by the warp paths.
Scalar bilinear_at(const Tensor& img, int n, int c, Scalar x, Scalar y);

}  // namespace depthgan
