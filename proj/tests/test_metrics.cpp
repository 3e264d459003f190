#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "depthgan/eval_outputs.hpp"
#include "depthgan/metrics.hpp"
#include "test_util.hpp"

using namespace depthgan;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

GeneratorConfig tiny_gcfg() {
  GeneratorConfig cfg;
  cfg.m = 16;
  cfg.t = 4;
  cfg.mapping_layers = 2;
  cfg.resolution = 32;
  cfg.channels = {12, 10, 8, 6};
  return cfg;
}

// Denman–Beavers iteration, an independent route to trace(sqrt(Sa Sb)).
double db_sqrt_trace(const GaussianStats& a, const GaussianStats& b) {
  using Mat = Eigen::MatrixXd;
  const int d = a.dim;
  Mat sa(d, d), sb(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      sa(i, j) = a.cov[static_cast<size_t>(i) * d + j];
      sb(i, j) = b.cov[static_cast<size_t>(i) * d + j];
    }
  Mat y = sa * sb;
  Mat z = Mat::Identity(d, d);
  for (int it = 0; it < 60; ++it) {
    const Mat yn = 0.5 * (y + z.inverse());
    const Mat zn = 0.5 * (z + y.inverse());
    y = yn;
    z = zn;
  }
  return y.trace();
}

GaussianStats random_spd_stats(int d, uint64_t seed) {
  Rng rng(seed);
  // covariance from an n > d sample so it is SPD
  std::vector<std::vector<Scalar>> samples;
  for (int i = 0; i < 4 * d; ++i) {
    std::vector<Scalar> s(d);
    for (auto& v : s) v = rng.normal();
    samples.push_back(s);
  }
  return embedding_stats(samples);
}

}  // namespace

TEST_CASE("embedding_stats: hand-computed case and two-pass oracle") {
  const std::vector<std::vector<Scalar>> two = {{1.0, 2.0}, {3.0, 6.0}};
  const GaussianStats s = embedding_stats(two);
  CHECK(s.mean[0] == Approx(2.0));
  CHECK(s.mean[1] == Approx(4.0));
  CHECK(s.cov[0] == Approx(2.0));   // var x (n-1 denominator)
  CHECK(s.cov[1] == Approx(4.0));   // cov xy
  CHECK(s.cov[3] == Approx(8.0));   // var y

  // constant embeddings -> zero covariance
  const GaussianStats c = embedding_stats({{5, 5, 5}, {5, 5, 5}, {5, 5, 5}});
  for (const Scalar v : c.cov) CHECK(v == Approx(0.0));

  // two-pass scalar oracle on random data
  Rng rng(3);
  std::vector<std::vector<Scalar>> data;
  for (int i = 0; i < 7; ++i)
    data.push_back({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
  const GaussianStats g = embedding_stats(data);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Scalar mi = 0, mj = 0;
      for (const auto& e : data) {
        mi += e[i];
        mj += e[j];
      }
      mi /= 7;
      mj /= 7;
      Scalar cov = 0;
      for (const auto& e : data) cov += (e[i] - mi) * (e[j] - mj);
      cov /= 6;
      CHECK(g.cov[static_cast<size_t>(i) * 4 + j] == Approx(cov).epsilon(1e-9));
    }

  CHECK_THROWS_AS(embedding_stats({{1.0}}), std::invalid_argument);
}

TEST_CASE("frechet_distance: identity, 1-D closed form, D-B oracle, properties") {
  const GaussianStats a = random_spd_stats(4, 11);
  CHECK(frechet_distance(a, a) == Approx(0.0).scale(1.0).epsilon(1e-6));

  GaussianStats n01, n11;
  n01.dim = n11.dim = 1;
  n01.mean = {0.0};
  n01.cov = {1.0};
  n11.mean = {1.0};
  n11.cov = {1.0};
  CHECK(frechet_distance(n01, n11) == Approx(1.0).epsilon(1e-9));

  for (uint64_t seed : {21ULL, 22ULL, 23ULL}) {
    const GaussianStats x = random_spd_stats(4, seed);
    const GaussianStats y = random_spd_stats(4, seed + 100);
    Scalar mean_term = 0;
    for (int i = 0; i < 4; ++i) {
      const Scalar d = x.mean[i] - y.mean[i];
      mean_term += d * d;
    }
    Scalar tr = 0;
    for (int i = 0; i < 4; ++i)
      tr += x.cov[static_cast<size_t>(i) * 4 + i] + y.cov[static_cast<size_t>(i) * 4 + i];
    const Scalar want = mean_term + tr - 2 * db_sqrt_trace(x, y);
    const Scalar got = frechet_distance(x, y);
    CHECK(got == Approx(want).epsilon(1e-5));
    // symmetry and nonnegativity
    CHECK(frechet_distance(y, x) == Approx(got).epsilon(1e-9));
    CHECK(got >= -1e-9);
  }

  GaussianStats wrong;
  wrong.dim = 3;
  wrong.mean = {0, 0, 0};
  wrong.cov.assign(9, 0.0);
  CHECK_THROWS_AS(frechet_distance(a, wrong), std::invalid_argument);
}

TEST_CASE("toy renderer floors: RP and RC on exact geometry") {
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 64, 64);
  ToyPairSource source(k, 0.5, 10.0, deg_to_rad(-15), deg_to_rad(15));
  Rng rng(42);
  const RotationMetrics m = rotation_metrics(source, k, 0.5, 10.0, 24, rng);
  CHECK(m.rp <= 0.01);
  CHECK(m.rc <= 0.02);
  CHECK(m.n_pairs == 24);
}

TEST_CASE("RP/RC vanish when the two angles coincide") {
  Rng rng(5);
  GeneratorConfig cfg = tiny_gcfg();
  Rng init(7);
  const Generator g = Generator::create(cfg, init);
  // pin both draws to (numerically) the same angle
  GeneratorPairSource source(g, 0.123, 0.123 + 1e-12);
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 32, 32);
  const RotationMetrics m = rotation_metrics(source, k, cfg.near, cfg.far, 4, rng);
  CHECK(m.rp == Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(m.rc == Approx(0.0).scale(1.0).epsilon(1e-6));
}

TEST_CASE("depth prediction metrics: uniform logits give ln k") {
  Rng init(9);
  DiscriminatorConfig dcfg;
  dcfg.resolution = 64;
  dcfg.channels = {6, 8, 10, 12, 12};
  dcfg.k_classes = 10;
  dcfg.branch_channels = {8, 6, 6};
  dcfg.final_dense = 16;
  Discriminator d = Discriminator::create(dcfg, init);
  // zero the head so every pixel gets uniform class logits
  for (auto& v : d.branch_head.weight->val.v) v = 0;
  for (auto& v : d.branch_head.bias->val.v) v = 0;

  Rng rng(13);
  RgbdBatch real;
  real.near = 0.5;
  real.far = 10.0;
  real.rgb = Tensor::randn(Shape(3, 3, 64, 64), rng);
  real.depth = Tensor(Shape(3, 1, 64, 64));
  for (auto& v : real.depth.v) v = rng.uniform(0.5, 10.0);
  const DepthPredictionMetrics m =
      depth_prediction_metrics(d, real, real, 0.5, 10.0);
  CHECK(m.dp_real == Approx(std::log(10.0)).epsilon(1e-9));
  CHECK(m.dp_fake == Approx(std::log(10.0)).epsilon(1e-9));
  CHECK(m.n_real == 3);
}

TEST_CASE("interpolation endpoints reproduce direct generation bitwise") {
  Rng init(21);
  GeneratorConfig cfg = tiny_gcfg();
  const Generator g = Generator::create(cfg, init);
  Rng zrng(31);
  InterpolationSpec spec;
  spec.z_a = Tensor::randn(Shape(1, cfg.m, 1, 1), zrng);
  spec.z_b = Tensor::randn(Shape(1, cfg.m, 1, 1), zrng);
  spec.z_fixed = Tensor::randn(Shape(1, cfg.m, 1, 1), zrng);
  spec.interpolate_depth = false;  // appearance interpolation
  spec.steps = 4;
  spec.theta = 0.1;
  spec.noise_seed = 99;

  const auto frames = interpolation_frames(g, spec);
  REQUIRE(frames.size() == 4);

  LatentPair ends;
  ends.z_d = spec.z_fixed;
  ends.z_rgb = spec.z_a;
  ends.theta = spec.theta;
  const RgbdImage direct_a = g.generate_image(ends, spec.noise_seed);
  ends.z_rgb = spec.z_b;
  const RgbdImage direct_b = g.generate_image(ends, spec.noise_seed);
  CHECK(testutil::max_abs_diff(frames.front().rgb, direct_a.rgb) == 0.0);
  CHECK(testutil::max_abs_diff(frames.back().rgb, direct_b.rgb) == 0.0);

  // appearance interpolation keeps the depth channel constant
  for (const auto& f : frames)
    CHECK(testutil::max_abs_diff(f.depth.values, frames[0].depth.values) == 0.0);

  // steps = 2 yields exactly the endpoints
  spec.steps = 2;
  const auto two = interpolation_frames(g, spec);
  CHECK(two.size() == 2);
  CHECK(testutil::max_abs_diff(two[0].rgb, direct_a.rgb) == 0.0);
  CHECK(testutil::max_abs_diff(two[1].rgb, direct_b.rgb) == 0.0);
}

TEST_CASE("w-space interpolation endpoints match direct w synthesis") {
  Rng init(27);
  GeneratorConfig cfg = tiny_gcfg();
  const Generator g = Generator::create(cfg, init);
  Rng zrng(33);
  InterpolationSpec spec;
  spec.z_a = Tensor::randn(Shape(1, cfg.m, 1, 1), zrng);
  spec.z_b = Tensor::randn(Shape(1, cfg.m, 1, 1), zrng);
  spec.z_fixed = Tensor::randn(Shape(1, cfg.m, 1, 1), zrng);
  spec.interpolate_depth = true;
  spec.w_space = true;
  spec.steps = 3;
  spec.theta = -0.1;
  spec.noise_seed = 5;
  const auto frames = interpolation_frames(g, spec);
  REQUIRE(frames.size() == 3);
  const Tensor wa = g.depth_path.mapping.forward(constant(spec.z_a))->val;
  const Tensor wf = g.rgb_path.mapping.forward(constant(spec.z_fixed))->val;
  const RgbdImage direct =
      g.generate_image_from_w(wa, wf, spec.theta, spec.noise_seed);
  CHECK(testutil::max_abs_diff(frames.front().rgb, direct.rgb) == 0.0);
  CHECK(testutil::max_abs_diff(frames.front().depth.values,
                               direct.depth.values) == 0.0);
  // z-space endpoint equals full generation, so the two spaces agree there
  LatentPair pair;
  pair.z_d = spec.z_a;
  pair.z_rgb = spec.z_fixed;
  pair.theta = spec.theta;
  const RgbdImage via_z = g.generate_image(pair, spec.noise_seed);
  CHECK(testutil::max_abs_diff(frames.front().rgb, via_z.rgb) == 0.0);
}

TEST_CASE("rotation sweep grid: columns, warnings, single angle") {
  Rng init(23);
  GeneratorConfig cfg = tiny_gcfg();
  const Generator g = Generator::create(cfg, init);
  Rng zrng(41);
  const Tensor z_d = Tensor::randn(Shape(1, cfg.m, 1, 1), zrng);
  const Tensor z_rgb = Tensor::randn(Shape(1, cfg.m, 1, 1), zrng);

  const fs::path out = fs::temp_directory_path() / "dg_sweep.png";
  const std::vector<Scalar> five = {deg_to_rad(-15), deg_to_rad(-7.5), 0,
                                    deg_to_rad(7.5), deg_to_rad(15)};
  auto warnings = rotation_sweep(g, z_d, z_rgb, five, 7, out.string());
  CHECK(warnings.empty());
  const ImageU8 grid = read_png_rgb8(out.string());
  CHECK(grid.w == 5 * 32 + 4 * 2);
  CHECK(grid.h == 2 * 32 + 2);

  warnings = rotation_sweep(g, z_d, z_rgb, {deg_to_rad(25)}, 7, out.string());
  CHECK(warnings.size() == 1);
  const ImageU8 single = read_png_rgb8(out.string());
  CHECK(single.w == 32);
  fs::remove(out);
}

TEST_CASE("point cloud export round trip and unprojection convention") {
  RgbdImage img;
  img.rgb = Tensor::zeros(Shape(1, 3, 2, 2));
  img.rgb.at(0, 0, 0, 0) = 1.0;
  img.depth = DepthMap::filled(2, 2, 2.0, 0.5, 10.0);
  CameraIntrinsics k;
  k.fx = k.fy = 4;
  k.cx = 1;
  k.cy = 0;
  k.width = k.height = 2;

  const fs::path out = fs::temp_directory_path() / "dg_export.ply";
  export_pointcloud(img, k, out.string());
  const PlyCloud cloud = read_ply(out.string());
  REQUIRE(cloud.points.size() == 4);
  // pixel (1,0) sits at the principal point -> x = y = 0
  CHECK(cloud.points[1].x == Approx(0.0).epsilon(1e-5));
  CHECK(cloud.points[1].y == Approx(0.0).epsilon(1e-5));
  CHECK(cloud.points[1].z == Approx(2.0).epsilon(1e-5));
  // colour of the first pixel: channel 0 was +1 -> 255
  CHECK(cloud.colors[0][0] == 255);
  fs::remove(out);
}
