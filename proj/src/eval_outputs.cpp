#include "depthgan/eval_outputs.hpp"

#include <cmath>
#include <cstdio>

namespace depthgan {

namespace {

// 3x5 glyphs for angle labels (degrees, sign, decimal point).
struct Glyph {
  char ch;
  uint16_t rows[5];  // 3 bits per row
};

const Glyph kGlyphs[] = {
    {'0', {0b111, 0b101, 0b101, 0b101, 0b111}},
    {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
    {'2', {0b111, 0b001, 0b111, 0b100, 0b111}},
    {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
    {'4', {0b101, 0b101, 0b111, 0b001, 0b001}},
    {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
    {'6', {0b111, 0b100, 0b111, 0b101, 0b111}},
    {'7', {0b111, 0b001, 0b010, 0b010, 0b010}},
    {'8', {0b111, 0b101, 0b111, 0b101, 0b111}},
    {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
    {'-', {0b000, 0b000, 0b111, 0b000, 0b000}},
    {'.', {0b000, 0b000, 0b000, 0b000, 0b010}},
    {' ', {0b000, 0b000, 0b000, 0b000, 0b000}},
};

const Glyph* find_glyph(char c) {
  for (const Glyph& g : kGlyphs)
    if (g.ch == c) return &g;
  return nullptr;
}

void stamp_label(Tensor& rgb, int x0, int y0, const std::string& text) {
  int x = x0;
  for (const char c : text) {
    const Glyph* g = find_glyph(c);
    if (!g) continue;
    for (int ry = 0; ry < 5; ++ry)
      for (int rx = 0; rx < 3; ++rx) {
        if (!((g->rows[ry] >> (2 - rx)) & 1)) continue;
        const int y = y0 + ry, xx = x + rx;
        if (y < 0 || y >= rgb.shape.h || xx < 0 || xx >= rgb.shape.w) continue;
        for (int ch = 0; ch < 3; ++ch) rgb.at(0, ch, y, xx) = 1.0;
      }
    x += 4;
  }
}

std::string angle_label(Scalar rad) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", rad_to_deg(rad));
  return buf;
}

}  // namespace

std::vector<RgbdImage> sweep_frames(const Generator& g, const Tensor& z_d,
                                    const Tensor& z_rgb,
                                    const std::vector<Scalar>& angles_rad,
                                    uint64_t noise_seed) {
  check_arg(!angles_rad.empty(), "sweep_frames: empty angle list");
  std::vector<RgbdImage> frames;
  for (const Scalar theta : angles_rad) {
    LatentPair pair;
    pair.z_d = z_d;
    pair.z_rgb = z_rgb;
    pair.theta = theta;
    frames.push_back(g.generate_image(pair, noise_seed));
  }
  return frames;
}

Tensor compose_rgbd_grid(const std::vector<RgbdImage>& frames,
                         const std::vector<std::string>& labels) {
  check_arg(!frames.empty(), "compose_rgbd_grid: no frames");
  check_arg(labels.empty() || labels.size() == frames.size(),
            "compose_rgbd_grid: label count mismatch");
  const int h = frames[0].h(), w = frames[0].w();
  const int sep = 2;
  const int cols = static_cast<int>(frames.size());
  const int grid_w = cols * w + (cols - 1) * sep;
  const int grid_h = 2 * h + sep;
  Tensor grid = Tensor::full(Shape(1, 3, grid_h, grid_w), -1.0);
  for (int i = 0; i < cols; ++i) {
    const RgbdImage& f = frames[i];
    check_arg(f.h() == h && f.w() == w, "compose_rgbd_grid: frame size mismatch");
    const int x0 = i * (w + sep);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c)
          grid.at(0, c, y, x0 + x) = f.rgb.at(0, c, y, x);
        const Scalar dn =
            (f.depth.at(y, x) - f.depth.near) / (f.depth.far - f.depth.near);
        for (int c = 0; c < 3; ++c)
          grid.at(0, c, h + sep + y, x0 + x) = 2.0 * dn - 1.0;
      }
    if (!labels.empty()) stamp_label(grid, x0 + 2, 2, labels[i]);
  }
  return grid;
}

std::vector<std::string> rotation_sweep(const Generator& g, const Tensor& z_d,
                                        const Tensor& z_rgb,
                                        const std::vector<Scalar>& angles_rad,
                                        uint64_t noise_seed,
                                        const std::string& out_png) {
  std::vector<std::string> warnings;
  const Scalar lo = deg_to_rad(g.cfg.theta_min_deg);
  const Scalar hi = deg_to_rad(g.cfg.theta_max_deg);
  for (const Scalar theta : angles_rad)
    if (theta < lo || theta > hi) {
      char buf[96];
      std::snprintf(buf, sizeof(buf),
                    "angle %.2f deg is outside the trained range [%.2f, %.2f]",
                    rad_to_deg(theta), g.cfg.theta_min_deg, g.cfg.theta_max_deg);
      warnings.push_back(buf);
    }
  const std::vector<RgbdImage> frames =
      sweep_frames(g, z_d, z_rgb, angles_rad, noise_seed);
  std::vector<std::string> labels;
  for (const Scalar theta : angles_rad) labels.push_back(angle_label(theta));
  write_rgb_tensor_png(out_png, compose_rgbd_grid(frames, labels));
  return warnings;
}

std::vector<RgbdImage> interpolation_frames(const Generator& g,
                                            const InterpolationSpec& spec) {
  check_arg(spec.steps >= 2, "interpolation_frames: need at least 2 steps");
  check_arg(spec.z_a.shape == spec.z_b.shape,
            "interpolation_frames: endpoint shapes differ");
  std::vector<RgbdImage> frames;
  Tensor wa, wb, w_fixed;
  if (spec.w_space) {
    const MappingNetwork& moving =
        spec.interpolate_depth ? g.depth_path.mapping : g.rgb_path.mapping;
    const MappingNetwork& fixed =
        spec.interpolate_depth ? g.rgb_path.mapping : g.depth_path.mapping;
    wa = moving.forward(constant(spec.z_a))->val;
    wb = moving.forward(constant(spec.z_b))->val;
    w_fixed = fixed.forward(constant(spec.z_fixed))->val;
  }
  for (int i = 0; i < spec.steps; ++i) {
    const Scalar t = static_cast<Scalar>(i) / (spec.steps - 1);
    if (spec.w_space) {
      Tensor w = wa;
      for (int64_t j = 0; j < w.numel(); ++j)
        w.v[j] = (1 - t) * wa.v[j] + t * wb.v[j];
      const Tensor& w_d = spec.interpolate_depth ? w : w_fixed;
      const Tensor& w_rgb = spec.interpolate_depth ? w_fixed : w;
      frames.push_back(
          g.generate_image_from_w(w_d, w_rgb, spec.theta, spec.noise_seed));
      continue;
    }
    Tensor z = spec.z_a;
    for (int64_t j = 0; j < z.numel(); ++j)
      z.v[j] = (1 - t) * spec.z_a.v[j] + t * spec.z_b.v[j];
    LatentPair pair;
    pair.z_d = spec.interpolate_depth ? z : spec.z_fixed;
    pair.z_rgb = spec.interpolate_depth ? spec.z_fixed : z;
    pair.theta = spec.theta;
    frames.push_back(g.generate_image(pair, spec.noise_seed));
  }
  return frames;
}

void interpolate_strip(const Generator& g, const InterpolationSpec& spec,
                       const std::string& out_png) {
  const std::vector<RgbdImage> frames = interpolation_frames(g, spec);
  write_rgb_tensor_png(out_png, compose_rgbd_grid(frames, {}));
}

void export_pointcloud(const RgbdImage& img, const CameraIntrinsics& k,
                       const std::string& path) {
  img.validate();
  PlyCloud cloud;
  cloud.points = unproject(img.depth, k);
  cloud.colors.reserve(cloud.points.size());
  for (int y = 0; y < img.h(); ++y)
    for (int x = 0; x < img.w(); ++x) {
      std::array<uint8_t, 3> c{};
      for (int ch = 0; ch < 3; ++ch) {
        const Scalar v01 = (img.rgb.at(0, ch, y, x) + 1.0) / 2.0;
        c[ch] = static_cast<uint8_t>(
            std::lround(std::min(std::max(v01, 0.0), 1.0) * 255.0));
      }
      cloud.colors.push_back(c);
    }
  write_ply(path, cloud);
}

}  // namespace depthgan
