#include "depthgan/camera.hpp"

#include <algorithm>
#include <cmath>

namespace depthgan {

void CameraIntrinsics::validate() const {
  check_arg(fx > 0 && fy > 0, "CameraIntrinsics: focal lengths must be positive");
  check_arg(width > 0 && height > 0, "CameraIntrinsics: image size must be positive");
  check_arg(cx >= 0 && cx < width && cy >= 0 && cy < height,
            "CameraIntrinsics: principal point outside the image");
}

CameraIntrinsics intrinsics_from_focal(Scalar focal_mm, Scalar sensor_width_mm,
                                       int width, int height) {
  check_arg(focal_mm > 0, "intrinsics_from_focal: focal_mm must be positive");
  check_arg(sensor_width_mm > 0,
            "intrinsics_from_focal: sensor_width_mm must be positive");
  check_arg(width > 0 && height > 0,
            "intrinsics_from_focal: image size must be positive");
  CameraIntrinsics k;
  k.fx = focal_mm / sensor_width_mm * static_cast<Scalar>(width);
  k.fy = k.fx;
  k.cx = static_cast<Scalar>(width) / 2;
  k.cy = static_cast<Scalar>(height) / 2;
  k.width = width;
  k.height = height;
  return k;
}

DepthMap DepthMap::filled(int h, int w, Scalar value, Scalar near, Scalar far) {
  DepthMap d;
  d.values = Tensor::full(Shape(1, 1, h, w), value);
  d.near = near;
  d.far = far;
  return d;
}

void DepthMap::validate() const {
  check_arg(values.shape.n == 1 && values.shape.c == 1,
            "DepthMap: values must be [1,1,H,W]");
  check_arg(near > 0 && far > near, "DepthMap: need 0 < near < far");
}

void RgbdImage::validate() const {
  depth.validate();
  check_arg(rgb.shape.n == 1 && rgb.shape.c == 3, "RgbdImage: rgb must be [1,3,H,W]");
  check_arg(rgb.shape.h == depth.h() && rgb.shape.w == depth.w(),
            "RgbdImage: rgb and depth sizes differ");
}

void RotationSpec::validate() const {
  check_arg(std::abs(axis.norm() - 1.0) < 1e-9, "RotationSpec: axis must be unit");
}

void WarpResult::validate() const {
  rgbd.validate();
  check_arg(mask.shape == Shape(1, 1, rgbd.h(), rgbd.w()),
            "WarpResult: mask size mismatch");
}

std::array<std::array<Scalar, 3>, 3> axis_angle_matrix(const Vec3& axis,
                                                       Scalar angle) {
  const Scalar c = std::cos(angle), s = std::sin(angle), t = 1 - c;
  const Scalar x = axis.x, y = axis.y, z = axis.z;
  return {{{t * x * x + c, t * x * y - s * z, t * x * z + s * y},
           {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
           {t * x * z - s * y, t * y * z + s * x, t * z * z + c}}};
}

RigidTransform central_axis_transform(const RotationSpec& spec) {
  spec.validate();
  RigidTransform t;
  t.rot = axis_angle_matrix(spec.axis, spec.theta2 - spec.theta1);
  // T(p) = R (p - pivot) + pivot  =>  trans = pivot - R pivot
  const Vec3 rp = {
      t.rot[0][0] * spec.pivot.x + t.rot[0][1] * spec.pivot.y + t.rot[0][2] * spec.pivot.z,
      t.rot[1][0] * spec.pivot.x + t.rot[1][1] * spec.pivot.y + t.rot[1][2] * spec.pivot.z,
      t.rot[2][0] * spec.pivot.x + t.rot[2][1] * spec.pivot.y + t.rot[2][2] * spec.pivot.z};
  t.trans = spec.pivot - rp;
  return t;
}

std::vector<Vec3> unproject(const DepthMap& depth, const CameraIntrinsics& k) {
  k.validate();
  check_arg(depth.w() == k.width && depth.h() == k.height,
            "unproject: depth size does not match intrinsics");
  std::vector<Vec3> points;
  points.reserve(static_cast<size_t>(depth.h()) * depth.w());
  for (int y = 0; y < depth.h(); ++y)
    for (int x = 0; x < depth.w(); ++x) {
      const Scalar d = depth.at(y, x);
      points.push_back({(x - k.cx) * d / k.fx, (y - k.cy) * d / k.fy, d});
    }
  return points;
}

Scalar mean_depth(const DepthMap& d) {
  Scalar sum = 0;
  for (const Scalar v : d.values.v) sum += v;
  return sum / static_cast<Scalar>(d.values.numel());
}

Scalar bilinear_at(const Tensor& img, int n, int c, Scalar x, Scalar y) {
  const int W = img.shape.w, H = img.shape.h;
  x = std::min(std::max(x, 0.0), static_cast<Scalar>(W - 1));
  y = std::min(std::max(y, 0.0), static_cast<Scalar>(H - 1));
  const int x0 = std::min(static_cast<int>(std::floor(x)), W >= 2 ? W - 2 : 0);
  const int y0 = std::min(static_cast<int>(std::floor(y)), H >= 2 ? H - 2 : 0);
  const Scalar fx = x - x0, fy = y - y0;
  const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
  return (1 - fy) * ((1 - fx) * img.at(n, c, y0, x0) + fx * img.at(n, c, y0, x1)) +
         fy * ((1 - fx) * img.at(n, c, y1, x0) + fx * img.at(n, c, y1, x1));
}

WarpResult backward_warp(const RgbdImage& source, const DepthMap& target_depth,
                         const CameraIntrinsics& k, const RotationSpec& spec) {
  source.validate();
  target_depth.validate();
  k.validate();
  check_arg(source.h() == k.height && source.w() == k.width,
            "backward_warp: source size does not match intrinsics");
  check_arg(target_depth.h() == k.height && target_depth.w() == k.width,
            "backward_warp: target depth size does not match intrinsics");

  const int H = k.height, W = k.width;
  // target (theta2) frame -> source (theta1) frame, and back.
  RotationSpec inverse = spec;
  std::swap(inverse.theta1, inverse.theta2);
  const RigidTransform to_source = central_axis_transform(inverse);
  const RigidTransform to_target = central_axis_transform(spec);

  WarpResult out;
  out.rgbd.rgb = Tensor::zeros(Shape(1, 3, H, W));
  out.rgbd.depth =
      DepthMap::filled(H, W, 0.0, target_depth.near, target_depth.far);
  out.mask = Tensor::zeros(Shape(1, 1, H, W));

  // Precompute the unprojection rays per column/row.
  std::vector<Scalar> rx(W), ry(H);
  for (int x = 0; x < W; ++x) rx[x] = (x - k.cx) / k.fx;
  for (int y = 0; y < H; ++y) ry[y] = (y - k.cy) / k.fy;

  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const Scalar d2 = target_depth.at(y, x);
      const Vec3 p2{rx[x] * d2, ry[y] * d2, d2};
      const Vec3 p1 = to_source.apply(p2);
      if (p1.z <= 0) continue;
      const Scalar u1 = k.fx * p1.x / p1.z + k.cx;
      const Scalar v1 = k.fy * p1.y / p1.z + k.cy;
      if (u1 < 0 || u1 > W - 1 || v1 < 0 || v1 > H - 1) continue;
      out.mask.at(0, 0, y, x) = 1.0;
      for (int c = 0; c < 3; ++c)
        out.rgbd.rgb.at(0, c, y, x) = bilinear_at(source.rgb, 0, c, u1, v1);
      // Sampled source depth carried back into the target frame.
      const Scalar d1 = bilinear_at(source.depth.values, 0, 0, u1, v1);
      const Vec3 ps{(u1 - k.cx) * d1 / k.fx, (v1 - k.cy) * d1 / k.fy, d1};
      out.rgbd.depth.at(y, x) = to_target.apply(ps).z;
    }
  return out;
}

}  // namespace depthgan
