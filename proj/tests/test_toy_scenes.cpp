#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "depthgan/imageio.hpp"
#include "depthgan/toy_scenes.hpp"
#include "test_util.hpp"

using namespace depthgan;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

SceneSpec empty_room_at(Scalar wall_z) {
  SceneSpec s;
  s.room_half = {3.0, 2.0, wall_z};      // camera at origin, room centred on pivot
  s.camera_distance = wall_z / 2;        // far wall sits at z = camera_distance + wall_z
  s.wall_albedo = {0.8, 0.6, 0.4};
  s.floor_albedo = {0.5, 0.5, 0.5};
  s.ceiling_albedo = {0.9, 0.9, 0.9};
  return s;
}

// Occupancy test in the canonical scene frame (solid objects, hollow room).
bool inside_solid(const SceneSpec& s, const Vec3& p) {
  for (const Cuboid& o : s.objects) {
    const Vec3 lo = o.center - o.half, hi = o.center + o.half;
    if (p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
        p.z <= hi.z)
      return true;
  }
  const Vec3 c = s.pivot();
  return p.x < c.x - s.room_half.x || p.x > c.x + s.room_half.x ||
         p.y < c.y - s.room_half.y || p.y > c.y + s.room_half.y ||
         p.z < c.z - s.room_half.z || p.z > c.z + s.room_half.z;
}

// March then bisect: an intersection oracle independent of the slab tests.
Scalar marching_depth(const SceneSpec& s, Scalar theta, Scalar rx, Scalar ry,
                      Scalar t_max) {
  const auto rot = axis_angle_matrix({0, 1, 0}, -theta);
  const Vec3 c = s.pivot();
  const Vec3 oc = Vec3{0, 0, 0} - c;
  const Vec3 o = Vec3{rot[0][0] * oc.x + rot[0][1] * oc.y + rot[0][2] * oc.z,
                      rot[1][0] * oc.x + rot[1][1] * oc.y + rot[1][2] * oc.z,
                      rot[2][0] * oc.x + rot[2][1] * oc.y + rot[2][2] * oc.z} +
                 c;
  const Vec3 dir{rx, ry, 1};
  const Vec3 d{rot[0][0] * dir.x + rot[0][1] * dir.y + rot[0][2] * dir.z,
               rot[1][0] * dir.x + rot[1][1] * dir.y + rot[1][2] * dir.z,
               rot[2][0] * dir.x + rot[2][1] * dir.y + rot[2][2] * dir.z};
  const Scalar step = t_max / 4000.0;
  Scalar lo = 0;
  Scalar hi = -1;
  for (Scalar t = step; t <= t_max + step; t += step) {
    const Vec3 p = o + d * t;
    if (inside_solid(s, p)) {
      hi = t;
      break;
    }
    lo = t;
  }
  if (hi < 0) return -1;
  for (int i = 0; i < 80; ++i) {
    const Scalar mid = (lo + hi) / 2;
    if (inside_solid(s, o + d * mid))
      hi = mid;
    else
      lo = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace

TEST_CASE("empty room: central pixel depth equals wall distance") {
  const SceneSpec s = empty_room_at(10.0 / 3.0);  // far wall at z = 5
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 33, 33);
  const RgbdImage img = render_scene(s, 0.0, k, 0.5, 10.0);
  CHECK(img.depth.at(16, 16) == Approx(5.0).epsilon(1e-9));
}

TEST_CASE("depth stays within [near, far]") {
  Rng rng(2);
  for (int i = 0; i < 4; ++i) {
    const SceneSpec s = random_scene(rng);
    const CameraIntrinsics k = intrinsics_from_focal(26, 36, 32, 32);
    const RgbdImage img = render_scene(s, rng.uniform(-0.26, 0.26), k, 0.5, 10.0);
    for (const Scalar d : img.depth.values.v) {
      CHECK(d >= 0.5);
      CHECK(d <= 10.0);
    }
    for (const Scalar v : img.rgb.v) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("analytic depths match the marching/bisection oracle") {
  Rng rng(41);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 32, 32);
  const SceneSpec s = random_scene(rng);
  const Scalar theta = rng.uniform(-0.2, 0.2);
  const RgbdImage img = render_scene(s, theta, k, 0.5, 20.0);
  const Tensor edges = depth_edge_mask(img.depth, 0.4, 1);
  int checked = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      if (edges.at(0, 0, y, x) > 0) continue;
      const Scalar rx = (x - k.cx) / k.fx;
      const Scalar ry = (y - k.cy) / k.fy;
      const Scalar ref = marching_depth(s, theta, rx, ry, 20.0);
      if (ref < 0) continue;
      CHECK(img.depth.at(y, x) == Approx(ref).epsilon(1e-6));
      ++checked;
    }
  CHECK(checked > 100);
}

TEST_CASE("renderer-warp cross-validation on random scenes") {
  Rng rng(77);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 64, 64);
  const Scalar near = 0.5, far = 10.0;
  Scalar worst_rgb = 0, worst_depth = 0;
  for (int i = 0; i < 6; ++i) {
    const SceneSpec s = random_scene(rng);
    RotationSpec spec;
    spec.theta1 = rng.uniform(deg_to_rad(-15), deg_to_rad(15));
    spec.theta2 = rng.uniform(deg_to_rad(-15), deg_to_rad(15));
    spec.pivot = s.pivot();
    const RgbdImage v1 = render_scene(s, spec.theta1, k, near, far);
    const RgbdImage v2 = render_scene(s, spec.theta2, k, near, far);
    const WarpResult warped = backward_warp(v1, v2.depth, k, spec);
    const Tensor keep =
        consistency_inclusion_mask(v2.depth, warped.rgbd.depth, 0.1, 2);

    Scalar rgb_err = 0, depth_err = 0, count = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        if (warped.mask.at(0, 0, y, x) == 0 || keep.at(0, 0, y, x) == 0) continue;
        for (int c = 0; c < 3; ++c)
          rgb_err += std::abs(warped.rgbd.rgb.at(0, c, y, x) - v2.rgb.at(0, c, y, x));
        depth_err += std::abs(warped.rgbd.depth.at(y, x) - v2.depth.at(y, x)) /
                     (far - near);
        count += 1;
      }
    REQUIRE(count > 500);
    worst_rgb = std::max(worst_rgb, rgb_err / (count * 3));
    worst_depth = std::max(worst_depth, depth_err / count);
  }
  CHECK(worst_rgb <= 0.02);
  CHECK(worst_depth <= 0.01);
}

TEST_CASE("dataset generation is deterministic and within the angle range") {
  const fs::path dir1 = fs::temp_directory_path() / "dg_toy_a";
  const fs::path dir2 = fs::temp_directory_path() / "dg_toy_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 16, 16);
  const auto m1 = generate_dataset(10, 3, 99, dir1.string(), k, 0.5, 10.0,
                                   deg_to_rad(-15), deg_to_rad(15));
  const auto m2 = generate_dataset(10, 3, 99, dir2.string(), k, 0.5, 10.0,
                                   deg_to_rad(-15), deg_to_rad(15));
  CHECK(m1.records.size() == 30);
  for (const auto& r : m1.records) {
    CHECK(r.angle >= deg_to_rad(-15));
    CHECK(r.angle <= deg_to_rad(15));
  }
  for (size_t i = 0; i < m1.records.size(); ++i) {
    auto bytes = [](const fs::path& p) {
      std::ifstream f(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(f), {});
    };
    CHECK(bytes(dir1 / m1.records[i].rgb_path) == bytes(dir2 / m2.records[i].rgb_path));
    CHECK(bytes(dir1 / m1.records[i].depth_path) ==
          bytes(dir2 / m2.records[i].depth_path));
  }
  // reload and compare the manifest
  const auto reloaded = load_manifest(dir1.string());
  CHECK(reloaded.records.size() == 30);
  CHECK(reloaded.near == Approx(0.5));
  CHECK(reloaded.camera.fx == Approx(k.fx));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("load_batch crops, resizes and round-trips depth") {
  const fs::path dir = fs::temp_directory_path() / "dg_toy_c";
  fs::remove_all(dir);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 24, 24);
  auto manifest = generate_dataset(2, 2, 5, dir.string(), k, 0.5, 10.0,
                                   deg_to_rad(-15), deg_to_rad(15));
  const RgbdBatch batch = load_batch(manifest, {0, 1, 2, 3}, 16);
  CHECK(batch.rgb.shape == Shape(4, 3, 16, 16));
  CHECK(batch.depth.shape == Shape(4, 1, 16, 16));
  for (const Scalar v : batch.rgb.v) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }

  // 16-bit depth encoding error bound
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const Scalar d = rng.uniform(0.5, 10.0);
    const Scalar rt = decode_depth16(encode_depth16(d, 0.5, 10.0), 0.5, 10.0);
    CHECK(std::abs(rt - d) <= (10.0 - 0.5) / 65535.0);
  }

  // non-square inputs centre-crop to square before resizing
  Tensor wide(Shape(1, 3, 10, 20));
  for (int64_t i = 0; i < wide.numel(); ++i) wide.v[i] = static_cast<Scalar>(i % 7);
  const Tensor cropped = center_crop_square(wide);
  CHECK(cropped.shape == Shape(1, 3, 10, 10));
  CHECK(cropped.at(0, 0, 0, 0) == wide.at(0, 0, 0, 5));

  // missing file surfaces a record-level error naming the path
  manifest.records[0].rgb_path = "missing.png";
  CHECK_THROWS_WITH_AS(load_batch(manifest, {0}, 16),
                       doctest::Contains("missing.png"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("ply round trip") {
  const fs::path path = fs::temp_directory_path() / "dg_cloud.ply";
  PlyCloud cloud;
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    cloud.points.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.5, 9)});
    cloud.colors.push_back({static_cast<uint8_t>(rng.uniform_index(256)),
                            static_cast<uint8_t>(rng.uniform_index(256)),
                            static_cast<uint8_t>(rng.uniform_index(256))});
  }
  write_ply(path.string(), cloud);
  const PlyCloud back = read_ply(path.string());
  REQUIRE(back.points.size() == cloud.points.size());
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    CHECK(back.points[i].x == Approx(cloud.points[i].x).epsilon(1e-5));
    CHECK(back.points[i].z == Approx(cloud.points[i].z).epsilon(1e-5));
    CHECK(back.colors[i] == cloud.colors[i]);
  }
  fs::remove(path);
}
