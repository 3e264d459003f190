#pragma once

#include <string>
#include <vector>

#include "depthgan/generator.hpp"
#include "depthgan/imageio.hpp"

namespace depthgan {

// One RGBD frame per angle with fixed codes and fixed noise.
std::vector<RgbdImage> sweep_frames(const Generator& g, const Tensor& z_d,
                                    const Tensor& z_rgb,
                                    const std::vector<Scalar>& angles_rad,
                                    uint64_t noise_seed);

// Renders the sweep as a labeled grid PNG (RGB row over depth row, one column
// per angle). Returns warnings, e.g. for angles outside the trained range.
std::vector<std::string> rotation_sweep(const Generator& g, const Tensor& z_d,
                                        const Tensor& z_rgb,
                                        const std::vector<Scalar>& angles_rad,
                                        uint64_t noise_seed,
                                        const std::string& out_png);

// Linear interpolation in one latent space with the other code fixed.
struct InterpolationSpec {
  Tensor z_a, z_b;      // endpoints of the interpolated code
  Tensor z_fixed;       // the other code, held fixed
  bool interpolate_depth = true;  // which code z_a/z_b stand for
  bool w_space = false;           // lerp mapped styles instead of z
  int steps = 5;
  Scalar theta = 0;
  uint64_t noise_seed = 0;
};

std::vector<RgbdImage> interpolation_frames(const Generator& g,
                                            const InterpolationSpec& spec);
void interpolate_strip(const Generator& g, const InterpolationSpec& spec,
                       const std::string& out_png);

// Colored point cloud of an RGBD image as ASCII PLY.
void export_pointcloud(const RgbdImage& img, const CameraIntrinsics& k,
                       const std::string& path);

// Grid compositor shared by the outputs above: one column per frame, RGB on
// top and normalized depth below, with a small stamped label.
Tensor compose_rgbd_grid(const std::vector<RgbdImage>& frames,
                         const std::vector<std::string>& labels);

}  // namespace depthgan
