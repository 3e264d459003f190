#pragma once

#include <optional>
#include <string>
#include <vector>

#include "depthgan/camera.hpp"
#include "depthgan/rng.hpp"

namespace depthgan {

// Procedural RGBD ground truth: a cuboid room (camera inside) with cuboid
// objects, ray-cast exactly at any rotation of the scene about the vertical
// axis through the pivot (0, 0, camera_distance). Colours are flat albedo
// scaled by 1/(1 + shading_alpha * depth) so appearance carries a depth cue.
struct Cuboid {
  Vec3 center;  // scene frame (theta = 0), camera at origin looking +z
  Vec3 half;
  std::array<Scalar, 3> albedo{};
};

struct SceneSpec {
  Vec3 room_half;
  Scalar camera_distance = 0;  // pivot z; room is centred on the pivot
  std::array<Scalar, 3> wall_albedo{};
  std::array<Scalar, 3> floor_albedo{};
  std::array<Scalar, 3> ceiling_albedo{};
  std::vector<Cuboid> objects;
  Scalar shading_alpha = 0.15;

  Vec3 pivot() const { return {0, 0, camera_distance}; }
  void validate() const;
};

SceneSpec random_scene(Rng& rng);

RgbdImage render_scene(const SceneSpec& spec, Scalar theta,
                       const CameraIntrinsics& k, Scalar near, Scalar far);

// Depth along the given pixel ray (unnormalized direction with dir.z == 1),
// exposed so tests can cross-check against a marching/bisection oracle.
Scalar ray_depth(const SceneSpec& spec, Scalar theta, Scalar rx, Scalar ry);

// 1 where the depth map jumps by more than `threshold` against a 4-neighbour,
// dilated by `dilate` pixels. Used to exclude silhouettes from geometric
// consistency checks, where bilinear sampling is undefined.
Tensor depth_edge_mask(const DepthMap& depth, Scalar threshold, int dilate);

// Inclusion mask (1 = comparable pixel) for warp-vs-render checks: silhouette
// edges of the target view and of the warped depth (which carries the source
// view's silhouettes and the validity border) are dilated and removed.
Tensor consistency_inclusion_mask(const DepthMap& target_depth,
                                  const DepthMap& warped_depth,
                                  Scalar threshold, int dilate);

// ---- dataset on disk ----

struct DatasetRecord {
  std::string rgb_path;    // relative to the manifest directory
  std::string depth_path;
  Scalar angle = 0;        // radians (toy data only)
  uint64_t scene_seed = 0;
};

struct DatasetManifest {
  std::vector<DatasetRecord> records;
  Scalar near = 0, far = 0;
  CameraIntrinsics camera;
  Scalar theta_min = 0, theta_max = 0;  // radians
  uint64_t seed = 0;
  std::string root;  // directory holding the manifest
};

// Renders n_scenes random scenes at `angles_per_scene` uniform angles in
// [theta_min, theta_max] and writes 8-bit RGB PNGs, 16-bit depth PNGs and
// manifest.json under out_dir. Deterministic for a fixed seed.
DatasetManifest generate_dataset(int n_scenes, int angles_per_scene,
                                 uint64_t seed, const std::string& out_dir,
                                 const CameraIntrinsics& k, Scalar near,
                                 Scalar far, Scalar theta_min, Scalar theta_max);

DatasetManifest load_manifest(const std::string& dir);

// Loads records, centre-crops to square, resizes to `resolution` and returns
// rgb in [-1,1] as [N,3,R,R] plus depth in camera units as [N,1,R,R].
struct RgbdBatch {
  Tensor rgb;
  Tensor depth;
  Scalar near = 0, far = 0;
};

RgbdBatch load_batch(const DatasetManifest& manifest,
                     const std::vector<int>& record_indices, int resolution);

}  // namespace depthgan
