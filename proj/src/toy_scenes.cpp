#include "depthgan/toy_scenes.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "depthgan/imageio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace depthgan {

namespace {

struct Hit {
  Scalar t = -1;
  Scalar range = 0;  // distance of the hit point from the canonical camera
  std::array<Scalar, 3> albedo{};
};

// Exit of a ray starting inside an axis-aligned box; also reports which face.
// Returns t < 0 if the origin is outside.
Scalar box_exit(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi,
                int* face_axis, int* face_sign) {
  const Scalar ox[3] = {o.x, o.y, o.z};
  const Scalar dx[3] = {d.x, d.y, d.z};
  const Scalar lox[3] = {lo.x, lo.y, lo.z};
  const Scalar hix[3] = {hi.x, hi.y, hi.z};
  for (int i = 0; i < 3; ++i)
    if (ox[i] < lox[i] || ox[i] > hix[i]) return -1;
  Scalar best = 1e300;
  int axis = 0, sign = 1;
  for (int i = 0; i < 3; ++i) {
    if (dx[i] > 0) {
      const Scalar t = (hix[i] - ox[i]) / dx[i];
      if (t < best) best = t, axis = i, sign = 1;
    } else if (dx[i] < 0) {
      const Scalar t = (lox[i] - ox[i]) / dx[i];
      if (t < best) best = t, axis = i, sign = -1;
    }
  }
  *face_axis = axis;
  *face_sign = sign;
  return best;
}

// First entry of a ray into an axis-aligned box, or -1.
Scalar box_entry(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi) {
  const Scalar ox[3] = {o.x, o.y, o.z};
  const Scalar dx[3] = {d.x, d.y, d.z};
  const Scalar lox[3] = {lo.x, lo.y, lo.z};
  const Scalar hix[3] = {hi.x, hi.y, hi.z};
  Scalar tmin = 0, tmax = 1e300;
  for (int i = 0; i < 3; ++i) {
    if (dx[i] == 0) {
      if (ox[i] < lox[i] || ox[i] > hix[i]) return -1;
      continue;
    }
    Scalar t0 = (lox[i] - ox[i]) / dx[i];
    Scalar t1 = (hix[i] - ox[i]) / dx[i];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return -1;
  }
  return tmin > 1e-9 ? tmin : -1;
}

Hit trace(const SceneSpec& spec, const Vec3& o, const Vec3& d) {
  const Vec3 c = spec.pivot();
  const Vec3 room_lo = c - spec.room_half;
  const Vec3 room_hi = c + spec.room_half;

  Hit hit;
  int axis = 0, sign = 1;
  const Scalar t_room = box_exit(o, d, room_lo, room_hi, &axis, &sign);
  check_runtime(t_room > 0, "render_scene: camera left the room");
  hit.t = t_room;
  if (axis == 1)
    hit.albedo = sign > 0 ? spec.floor_albedo : spec.ceiling_albedo;
  else
    hit.albedo = spec.wall_albedo;

  for (const Cuboid& obj : spec.objects) {
    const Scalar t = box_entry(o, d, obj.center - obj.half, obj.center + obj.half);
    if (t > 0 && t < hit.t) {
      hit.t = t;
      hit.albedo = obj.albedo;
    }
  }
  // Shading uses the hit point's distance in the canonical frame so that a
  // scene point keeps its colour under rotation.
  hit.range = (o + d * hit.t).norm();
  return hit;
}

// The scene is rotated by theta about the pivot axis with the camera fixed,
// which is the same as casting rays rotated by -theta in the canonical frame.
void canonical_ray(const SceneSpec& spec, Scalar theta, Scalar rx, Scalar ry,
                   Vec3* o, Vec3* d) {
  const auto rot = axis_angle_matrix({0, 1, 0}, -theta);
  const Vec3 c = spec.pivot();
  const Vec3 oc = Vec3{0, 0, 0} - c;
  *o = Vec3{rot[0][0] * oc.x + rot[0][1] * oc.y + rot[0][2] * oc.z,
            rot[1][0] * oc.x + rot[1][1] * oc.y + rot[1][2] * oc.z,
            rot[2][0] * oc.x + rot[2][1] * oc.y + rot[2][2] * oc.z} +
       c;
  const Vec3 dir{rx, ry, 1};
  *d = Vec3{rot[0][0] * dir.x + rot[0][1] * dir.y + rot[0][2] * dir.z,
            rot[1][0] * dir.x + rot[1][1] * dir.y + rot[1][2] * dir.z,
            rot[2][0] * dir.x + rot[2][1] * dir.y + rot[2][2] * dir.z};
}

}  // namespace

void SceneSpec::validate() const {
  check_arg(room_half.x > 0 && room_half.y > 0 && room_half.z > 0,
            "SceneSpec: room extents must be positive");
  check_arg(camera_distance > 0 && camera_distance < room_half.z,
            "SceneSpec: camera must sit inside the room");
  const Vec3 c = pivot();
  const Scalar eps = 1e-9;
  for (const Cuboid& obj : objects) {
    check_arg(obj.half.x > 0 && obj.half.y > 0 && obj.half.z > 0,
              "SceneSpec: object extents must be positive");
    const Vec3 lo = obj.center - obj.half, hi = obj.center + obj.half;
    check_arg(lo.x >= c.x - room_half.x - eps && hi.x <= c.x + room_half.x + eps &&
                  lo.y >= c.y - room_half.y - eps && hi.y <= c.y + room_half.y + eps &&
                  lo.z >= c.z - room_half.z - eps && hi.z <= c.z + room_half.z + eps,
              "SceneSpec: object outside the room");
  }
}

SceneSpec random_scene(Rng& rng) {
  SceneSpec s;
  s.room_half = {rng.uniform(2.2, 3.2), rng.uniform(1.5, 2.2),
                 rng.uniform(2.8, 4.2)};
  s.camera_distance = s.room_half.z * rng.uniform(0.45, 0.8);
  auto albedo = [&rng] {
    return std::array<Scalar, 3>{rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95),
                                 rng.uniform(0.15, 0.95)};
  };
  s.wall_albedo = albedo();
  s.floor_albedo = albedo();
  s.ceiling_albedo = albedo();
  const Vec3 c = s.pivot();
  const int n_objects = 1 + static_cast<int>(rng.uniform_index(4));
  for (int i = 0; i < n_objects; ++i) {
    for (int attempt = 0; attempt < 32; ++attempt) {
      Cuboid obj;
      obj.half = {rng.uniform(0.25, 0.7), rng.uniform(0.25, 0.9),
                  rng.uniform(0.25, 0.7)};
      obj.center.x = rng.uniform(-(s.room_half.x - obj.half.x),
                                 s.room_half.x - obj.half.x);
      obj.center.y = c.y + s.room_half.y - obj.half.y;  // resting on the floor
      obj.center.z = c.z + rng.uniform(-(s.room_half.z - obj.half.z),
                                       s.room_half.z - obj.half.z);
      obj.albedo = albedo();
      // Keep a clearance ball around the camera at the origin.
      const Vec3 lo = obj.center - obj.half, hi = obj.center + obj.half;
      const Scalar dx = std::max({lo.x, 0.0, -hi.x});
      const Scalar dy = std::max({lo.y, 0.0, -hi.y});
      const Scalar dz = std::max({lo.z, 0.0, -hi.z});
      if (std::sqrt(dx * dx + dy * dy + dz * dz) < 0.45) continue;
      s.objects.push_back(obj);
      break;
    }
  }
  s.validate();
  return s;
}

Scalar ray_depth(const SceneSpec& spec, Scalar theta, Scalar rx, Scalar ry) {
  Vec3 o, d;
  canonical_ray(spec, theta, rx, ry, &o, &d);
  return trace(spec, o, d).t;  // dir.z == 1, so t is the optical-axis depth
}

RgbdImage render_scene(const SceneSpec& spec, Scalar theta,
                       const CameraIntrinsics& k, Scalar near, Scalar far) {
  spec.validate();
  k.validate();
  check_arg(near > 0 && far > near, "render_scene: need 0 < near < far");

  RgbdImage img;
  img.rgb = Tensor::zeros(Shape(1, 3, k.height, k.width));
  img.depth = DepthMap::filled(k.height, k.width, 0.0, near, far);

  const auto rot = axis_angle_matrix({0, 1, 0}, -theta);
  const Vec3 c = spec.pivot();
  const Vec3 oc = Vec3{0, 0, 0} - c;
  const Vec3 o = Vec3{rot[0][0] * oc.x + rot[0][1] * oc.y + rot[0][2] * oc.z,
                      rot[1][0] * oc.x + rot[1][1] * oc.y + rot[1][2] * oc.z,
                      rot[2][0] * oc.x + rot[2][1] * oc.y + rot[2][2] * oc.z} +
                 c;
  for (int y = 0; y < k.height; ++y) {
    const Scalar ry = (y - k.cy) / k.fy;
    for (int x = 0; x < k.width; ++x) {
      const Scalar rx = (x - k.cx) / k.fx;
      const Vec3 dir{rx, ry, 1};
      const Vec3 d{rot[0][0] * dir.x + rot[0][1] * dir.y + rot[0][2] * dir.z,
                   rot[1][0] * dir.x + rot[1][1] * dir.y + rot[1][2] * dir.z,
                   rot[2][0] * dir.x + rot[2][1] * dir.y + rot[2][2] * dir.z};
      const Hit hit = trace(spec, o, d);
      const Scalar shade = 1.0 / (1.0 + spec.shading_alpha * hit.range);
      for (int ch = 0; ch < 3; ++ch) {
        const Scalar v = std::min(std::max(hit.albedo[ch] * shade, 0.0), 1.0);
        img.rgb.at(0, ch, y, x) = 2.0 * v - 1.0;
      }
      img.depth.at(y, x) = std::min(std::max(hit.t, near), far);
    }
  }
  return img;
}

Tensor depth_edge_mask(const DepthMap& depth, Scalar threshold, int dilate) {
  const int H = depth.h(), W = depth.w();
  Tensor mask = Tensor::zeros(Shape(1, 1, H, W));
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const Scalar d = depth.at(y, x);
      bool edge = false;
      if (y > 0 && std::abs(d - depth.at(y - 1, x)) > threshold) edge = true;
      if (y + 1 < H && std::abs(d - depth.at(y + 1, x)) > threshold) edge = true;
      if (x > 0 && std::abs(d - depth.at(y, x - 1)) > threshold) edge = true;
      if (x + 1 < W && std::abs(d - depth.at(y, x + 1)) > threshold) edge = true;
      if (edge) mask.at(0, 0, y, x) = 1.0;
    }
  for (int pass = 0; pass < dilate; ++pass) {
    Tensor grown = mask;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        if (mask.at(0, 0, y, x) == 0.0) continue;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy, nx = x + dx;
            if (ny >= 0 && ny < H && nx >= 0 && nx < W)
              grown.at(0, 0, ny, nx) = 1.0;
          }
      }
    mask = grown;
  }
  return mask;
}

Tensor consistency_inclusion_mask(const DepthMap& target_depth,
                                  const DepthMap& warped_depth,
                                  Scalar threshold, int dilate) {
  const Tensor e1 = depth_edge_mask(target_depth, threshold, dilate);
  const Tensor e2 = depth_edge_mask(warped_depth, threshold, dilate);
  Tensor keep(e1.shape);
  for (int64_t i = 0; i < keep.numel(); ++i)
    keep.v[i] = (e1.v[i] > 0 || e2.v[i] > 0) ? 0.0 : 1.0;
  return keep;
}

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string index_name(int index, const char* suffix) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "img_%06d_%s.png", index, suffix);
  return buf;
}

}  // namespace

DatasetManifest generate_dataset(int n_scenes, int angles_per_scene,
                                 uint64_t seed, const std::string& out_dir,
                                 const CameraIntrinsics& k, Scalar near,
                                 Scalar far, Scalar theta_min, Scalar theta_max) {
  check_arg(n_scenes > 0 && angles_per_scene > 0,
            "generate_dataset: counts must be positive");
  check_arg(theta_min < theta_max, "generate_dataset: bad angle range");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  check_runtime(!ec, "generate_dataset: cannot create " + out_dir);

  DatasetManifest m;
  m.near = near;
  m.far = far;
  m.camera = k;
  m.theta_min = theta_min;
  m.theta_max = theta_max;
  m.seed = seed;
  m.root = out_dir;

  int index = 0;
  for (int s = 0; s < n_scenes; ++s) {
    const uint64_t scene_seed = mix_seed(seed, static_cast<uint64_t>(s));
    Rng rng(scene_seed);
    const SceneSpec spec = random_scene(rng);
    for (int a = 0; a < angles_per_scene; ++a) {
      const Scalar theta = rng.uniform(theta_min, theta_max);
      const RgbdImage img = render_scene(spec, theta, k, near, far);
      DatasetRecord rec;
      rec.rgb_path = index_name(index, "rgb");
      rec.depth_path = index_name(index, "depth");
      rec.angle = theta;
      rec.scene_seed = scene_seed;
      write_rgb_tensor_png((fs::path(out_dir) / rec.rgb_path).string(), img.rgb);
      write_depth_tensor_png((fs::path(out_dir) / rec.depth_path).string(),
                             img.depth.values, near, far);
      m.records.push_back(rec);
      ++index;
    }
  }

  json j;
  j["format_version"] = 1;
  j["seed"] = seed;
  j["near"] = near;
  j["far"] = far;
  j["theta_min"] = theta_min;
  j["theta_max"] = theta_max;
  j["camera"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
                 {"width", k.width}, {"height", k.height}};
  json recs = json::array();
  for (const auto& r : m.records)
    recs.push_back({{"rgb", r.rgb_path},
                    {"depth", r.depth_path},
                    {"angle", r.angle},
                    {"scene_seed", r.scene_seed}});
  j["records"] = std::move(recs);
  std::ofstream f(fs::path(out_dir) / "manifest.json");
  check_runtime(f.good(), "generate_dataset: cannot write manifest");
  f << j.dump(2) << "\n";
  check_runtime(f.good(), "generate_dataset: manifest write failure");
  return m;
}

DatasetManifest load_manifest(const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ifstream f(path);
  check_runtime(f.good(), "load_manifest: cannot open " + path.string());
  json j;
  f >> j;
  check_runtime(j.value("format_version", 0) == 1,
                "load_manifest: unsupported format_version in " + path.string());
  DatasetManifest m;
  m.root = dir;
  m.seed = j.at("seed").get<uint64_t>();
  m.near = j.at("near").get<Scalar>();
  m.far = j.at("far").get<Scalar>();
  m.theta_min = j.at("theta_min").get<Scalar>();
  m.theta_max = j.at("theta_max").get<Scalar>();
  const json& cam = j.at("camera");
  m.camera.fx = cam.at("fx").get<Scalar>();
  m.camera.fy = cam.at("fy").get<Scalar>();
  m.camera.cx = cam.at("cx").get<Scalar>();
  m.camera.cy = cam.at("cy").get<Scalar>();
  m.camera.width = cam.at("width").get<int>();
  m.camera.height = cam.at("height").get<int>();
  for (const json& r : j.at("records")) {
    DatasetRecord rec;
    rec.rgb_path = r.at("rgb").get<std::string>();
    rec.depth_path = r.at("depth").get<std::string>();
    rec.angle = r.value("angle", 0.0);
    rec.scene_seed = r.value("scene_seed", 0ULL);
    m.records.push_back(rec);
  }
  return m;
}

RgbdBatch load_batch(const DatasetManifest& manifest,
                     const std::vector<int>& record_indices, int resolution) {
  check_arg(!record_indices.empty(), "load_batch: empty index list");
  check_arg(resolution > 0, "load_batch: bad resolution");
  const int N = static_cast<int>(record_indices.size());
  RgbdBatch batch;
  batch.rgb = Tensor::zeros(Shape(N, 3, resolution, resolution));
  batch.depth = Tensor::zeros(Shape(N, 1, resolution, resolution));
  batch.near = manifest.near;
  batch.far = manifest.far;

  for (int i = 0; i < N; ++i) {
    const int idx = record_indices[i];
    check_arg(idx >= 0 && idx < static_cast<int>(manifest.records.size()),
              "load_batch: record index out of range");
    const DatasetRecord& rec = manifest.records[idx];
    const std::string rgb_path = (fs::path(manifest.root) / rec.rgb_path).string();
    const std::string depth_path =
        (fs::path(manifest.root) / rec.depth_path).string();

    ImageU8 rgb8;
    try {
      rgb8 = read_png_rgb8(rgb_path);
    } catch (const std::exception& e) {
      throw std::runtime_error("load_batch: record " + std::to_string(idx) +
                               ": " + e.what());
    }
    Tensor rgb(Shape(1, 3, rgb8.h, rgb8.w));
    for (int y = 0; y < rgb8.h; ++y)
      for (int x = 0; x < rgb8.w; ++x)
        for (int c = 0; c < 3; ++c)
          rgb.at(0, c, y, x) =
              rgb8.data[(static_cast<size_t>(y) * rgb8.w + x) * 3 + c] / 255.0 *
                  2.0 -
              1.0;

    Tensor depth;
    if (rec.depth_path.size() > 4 &&
        rec.depth_path.substr(rec.depth_path.size() - 4) == ".f32") {
      const auto raw = read_f32_raw(
          depth_path, static_cast<size_t>(rgb8.w) * static_cast<size_t>(rgb8.h));
      depth = Tensor(Shape(1, 1, rgb8.h, rgb8.w));
      for (size_t p = 0; p < raw.size(); ++p) depth.v[p] = raw[p];
    } else {
      int dw = 0, dh = 0;
      std::vector<uint16_t> d16;
      try {
        d16 = read_png_gray16(depth_path, dw, dh);
      } catch (const std::exception& e) {
        throw std::runtime_error("load_batch: record " + std::to_string(idx) +
                                 ": " + e.what());
      }
      check_runtime(dw == rgb8.w && dh == rgb8.h,
                    "load_batch: record " + std::to_string(idx) +
                        ": rgb and depth dimensions differ");
      depth = Tensor(Shape(1, 1, dh, dw));
      for (size_t p = 0; p < d16.size(); ++p)
        depth.v[p] = decode_depth16(d16[p], manifest.near, manifest.far);
    }

    Tensor rgb_sq = bilinear_resize(center_crop_square(rgb), resolution, resolution);
    Tensor depth_sq =
        bilinear_resize(center_crop_square(depth), resolution, resolution);
    std::copy_n(rgb_sq.data(), rgb_sq.numel(),
                batch.rgb.data() + static_cast<int64_t>(i) * 3 * resolution * resolution);
    std::copy_n(depth_sq.data(), depth_sq.numel(),
                batch.depth.data() + static_cast<int64_t>(i) * resolution * resolution);
  }
  return batch;
}

}  // namespace depthgan
