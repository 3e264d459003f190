#include "depthgan/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace depthgan {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  check_runtime(f != nullptr, "cannot open file: " + path);
  return f;
}

}  // namespace

void write_png_rgb8(const std::string& path, int w, int h,
                    const std::vector<uint8_t>& interleaved_rgb) {
  check_arg(interleaved_rgb.size() == static_cast<size_t>(w) * h * 3,
            "write_png_rgb8: buffer size mismatch");
  FilePtr fp = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng write failure: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(&interleaved_rgb[static_cast<size_t>(y) * w * 3]);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageU8 read_png_rgb8(const std::string& path) {
  FilePtr fp = open_file(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng read failure: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  ImageU8 img;
  img.w = static_cast<int>(png_get_image_width(png, info));
  img.h = static_cast<int>(png_get_image_height(png, info));
  img.channels = 3;
  check_runtime(png_get_channels(png, info) == 3,
                "read_png_rgb8: unexpected channel count in " + path);
  img.data.resize(static_cast<size_t>(img.w) * img.h * 3);
  std::vector<png_bytep> rows(img.h);
  for (int y = 0; y < img.h; ++y)
    rows[y] = &img.data[static_cast<size_t>(y) * img.w * 3];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png_gray16(const std::string& path, int w, int h,
                      const std::vector<uint16_t>& values) {
  check_arg(values.size() == static_cast<size_t>(w) * h,
            "write_png_gray16: buffer size mismatch");
  FilePtr fp = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng write failure: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);  // rows below are host little-endian
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<uint16_t*>(&values[static_cast<size_t>(y) * w]));
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<uint16_t> read_png_gray16(const std::string& path, int& w, int& h) {
  FilePtr fp = open_file(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng read failure: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  check_runtime(png_get_bit_depth(png, info) == 16 &&
                    png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY,
                "read_png_gray16: " + path + " is not 16-bit grayscale");
  png_set_swap(png);
  png_read_update_info(png, info);
  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  std::vector<uint16_t> values(static_cast<size_t>(w) * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = reinterpret_cast<png_bytep>(&values[static_cast<size_t>(y) * w]);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return values;
}

void write_f32_raw(const std::string& path, const std::vector<float>& values) {
  std::ofstream f(path, std::ios::binary);
  check_runtime(f.good(), "cannot open file: " + path);
  f.write(reinterpret_cast<const char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(float)));
  check_runtime(f.good(), "write failure: " + path);
}

std::vector<float> read_f32_raw(const std::string& path, size_t expected_count) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  check_runtime(f.good(), "cannot open file: " + path);
  const auto bytes = static_cast<size_t>(f.tellg());
  check_runtime(bytes == expected_count * sizeof(float),
                "read_f32_raw: " + path + " has unexpected size");
  f.seekg(0);
  std::vector<float> values(expected_count);
  f.read(reinterpret_cast<char*>(values.data()),
         static_cast<std::streamsize>(bytes));
  check_runtime(f.good(), "read failure: " + path);
  return values;
}

uint16_t encode_depth16(Scalar d, Scalar near, Scalar far) {
  const Scalar t = (d - near) / (far - near);
  const Scalar q = std::round(std::min(std::max(t, 0.0), 1.0) * 65535.0);
  return static_cast<uint16_t>(q);
}

Scalar decode_depth16(uint16_t code, Scalar near, Scalar far) {
  return near + (far - near) * (static_cast<Scalar>(code) / 65535.0);
}

void write_rgb_tensor_png(const std::string& path, const Tensor& rgb) {
  check_arg(rgb.shape.n == 1 && rgb.shape.c == 3,
            "write_rgb_tensor_png: expected [1,3,H,W]");
  const int H = rgb.shape.h, W = rgb.shape.w;
  std::vector<uint8_t> buf(static_cast<size_t>(H) * W * 3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        const Scalar v01 = (rgb.at(0, c, y, x) + 1.0) / 2.0;
        const Scalar q = std::round(std::min(std::max(v01, 0.0), 1.0) * 255.0);
        buf[(static_cast<size_t>(y) * W + x) * 3 + c] = static_cast<uint8_t>(q);
      }
  write_png_rgb8(path, W, H, buf);
}

void write_depth_tensor_png(const std::string& path, const Tensor& depth,
                            Scalar near, Scalar far) {
  check_arg(depth.shape.n == 1 && depth.shape.c == 1,
            "write_depth_tensor_png: expected [1,1,H,W]");
  const int H = depth.shape.h, W = depth.shape.w;
  std::vector<uint16_t> buf(static_cast<size_t>(H) * W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      buf[static_cast<size_t>(y) * W + x] =
          encode_depth16(depth.at(0, 0, y, x), near, far);
  write_png_gray16(path, W, H, buf);
}

Tensor bilinear_resize(const Tensor& t, int out_h, int out_w) {
  check_arg(out_h > 0 && out_w > 0, "bilinear_resize: bad output size");
  const Shape& s = t.shape;
  if (s.h == out_h && s.w == out_w) return t;
  Tensor out(Shape(s.n, s.c, out_h, out_w));
  const Scalar sy = static_cast<Scalar>(s.h) / out_h;
  const Scalar sx = static_cast<Scalar>(s.w) / out_w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox) {
          const Scalar y = (oy + 0.5) * sy - 0.5;
          const Scalar x = (ox + 0.5) * sx - 0.5;
          out.at(n, c, oy, ox) = bilinear_at(t, n, c, x, y);
        }
  return out;
}

Tensor center_crop_square(const Tensor& t) {
  const Shape& s = t.shape;
  if (s.h == s.w) return t;
  const int side = std::min(s.h, s.w);
  const int oy = (s.h - side) / 2;
  const int ox = (s.w - side) / 2;
  Tensor out(Shape(s.n, s.c, side, side));
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          out.at(n, c, y, x) = t.at(n, c, y + oy, x + ox);
  return out;
}

Tensor area_downsample(const Tensor& t, int factor) {
  check_arg(factor >= 1 && t.shape.h % factor == 0 && t.shape.w % factor == 0,
            "area_downsample: size not divisible by factor");
  if (factor == 1) return t;
  const Shape& s = t.shape;
  Tensor out(Shape(s.n, s.c, s.h / factor, s.w / factor));
  const Scalar inv = 1.0 / (static_cast<Scalar>(factor) * factor);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int oy = 0; oy < out.shape.h; ++oy)
        for (int ox = 0; ox < out.shape.w; ++ox) {
          Scalar acc = 0;
          for (int dy = 0; dy < factor; ++dy)
            for (int dx = 0; dx < factor; ++dx)
              acc += t.at(n, c, oy * factor + dy, ox * factor + dx);
          out.at(n, c, oy, ox) = acc * inv;
        }
  return out;
}

void write_ply(const std::string& path, const PlyCloud& cloud) {
  check_arg(cloud.points.size() == cloud.colors.size(),
            "write_ply: point/colour count mismatch");
  std::ofstream f(path);
  check_runtime(f.good(), "cannot open file: " + path);
  f << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size() << "\n"
    << "property float x\nproperty float y\nproperty float z\n"
    << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
    << "end_header\n";
  char line[160];
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const auto& c = cloud.colors[i];
    std::snprintf(line, sizeof(line), "%.8g %.8g %.8g %d %d %d\n", p.x, p.y,
                  p.z, c[0], c[1], c[2]);
    f << line;
  }
  check_runtime(f.good(), "write failure: " + path);
}

PlyCloud read_ply(const std::string& path) {
  std::ifstream f(path);
  check_runtime(f.good(), "cannot open file: " + path);
  std::string line;
  size_t n_vertices = 0;
  bool header_done = false;
  while (std::getline(f, line)) {
    if (line.rfind("element vertex", 0) == 0) {
      std::istringstream ss(line.substr(15));
      ss >> n_vertices;
    }
    if (line == "end_header") {
      header_done = true;
      break;
    }
  }
  check_runtime(header_done, "read_ply: missing end_header in " + path);
  PlyCloud cloud;
  cloud.points.resize(n_vertices);
  cloud.colors.resize(n_vertices);
  for (size_t i = 0; i < n_vertices; ++i) {
    int r, g, b;
    check_runtime(static_cast<bool>(f >> cloud.points[i].x >> cloud.points[i].y >>
                                    cloud.points[i].z >> r >> g >> b),
                  "read_ply: truncated vertex data in " + path);
    cloud.colors[i] = {static_cast<uint8_t>(r), static_cast<uint8_t>(g),
                       static_cast<uint8_t>(b)};
  }
  return cloud;
}

}  // namespace depthgan
