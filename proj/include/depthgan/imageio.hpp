#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "depthgan/camera.hpp"
#include "depthgan/tensor.hpp"

namespace depthgan {

struct ImageU8 {
  int w = 0, h = 0, channels = 0;
  std::vector<uint8_t> data;  // interleaved rows
};

void write_png_rgb8(const std::string& path, int w, int h,
                    const std::vector<uint8_t>& interleaved_rgb);
ImageU8 read_png_rgb8(const std::string& path);  // expands gray/palette, drops alpha

void write_png_gray16(const std::string& path, int w, int h,
                      const std::vector<uint16_t>& values);
std::vector<uint16_t> read_png_gray16(const std::string& path, int& w, int& h);

void write_f32_raw(const std::string& path, const std::vector<float>& values);
std::vector<float> read_f32_raw(const std::string& path, size_t expected_count);

// 16-bit depth encoding over [near, far].
uint16_t encode_depth16(Scalar d, Scalar near, Scalar far);
Scalar decode_depth16(uint16_t code, Scalar near, Scalar far);

// [1,3,H,W] in [-1,1] -> 8-bit PNG (values clamped).
void write_rgb_tensor_png(const std::string& path, const Tensor& rgb);
// [1,1,H,W] depth -> 16-bit PNG.
void write_depth_tensor_png(const std::string& path, const Tensor& depth,
                            Scalar near, Scalar far);

// ---- raw tensor resampling (data pipeline; not differentiated) ----
Tensor bilinear_resize(const Tensor& t, int out_h, int out_w);
Tensor center_crop_square(const Tensor& t);
Tensor area_downsample(const Tensor& t, int factor);

// ---- ASCII PLY point clouds (x y z r g b per vertex) ----
struct PlyCloud {
  std::vector<Vec3> points;
  std::vector<std::array<uint8_t, 3>> colors;
};

void write_ply(const std::string& path, const PlyCloud& cloud);
PlyCloud read_ply(const std::string& path);

}  // namespace depthgan
