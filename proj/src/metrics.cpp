#include "depthgan/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "depthgan/imageio.hpp"
#include "depthgan/losses.hpp"

namespace depthgan {

namespace {
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

Mat sqrtm_psd(const Mat& m, Scalar clamp_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(m);
  check_runtime(eig.info() == Eigen::Success,
                "frechet_distance: eigendecomposition failed");
  Vec vals = eig.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) {
    check_runtime(vals[i] > -clamp_tol,
                  "frechet_distance: matrix is not PSD within tolerance");
    vals[i] = std::sqrt(std::max(vals[i], 0.0));
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}
}  // namespace

GaussianStats embedding_stats(const std::vector<std::vector<Scalar>>& embeddings) {
  check_arg(embeddings.size() >= 2, "embedding_stats: need at least 2 samples");
  const int n = static_cast<int>(embeddings.size());
  const int d = static_cast<int>(embeddings[0].size());
  for (const auto& e : embeddings)
    check_arg(static_cast<int>(e.size()) == d,
              "embedding_stats: inconsistent embedding dimensions");
  GaussianStats s;
  s.dim = d;
  s.mean.assign(d, 0.0);
  for (const auto& e : embeddings)
    for (int i = 0; i < d; ++i) s.mean[i] += e[i];
  for (auto& m : s.mean) m /= n;
  s.cov.assign(static_cast<size_t>(d) * d, 0.0);
  for (const auto& e : embeddings)
    for (int i = 0; i < d; ++i) {
      const Scalar di = e[i] - s.mean[i];
      for (int j = 0; j < d; ++j)
        s.cov[static_cast<size_t>(i) * d + j] += di * (e[j] - s.mean[j]);
    }
  for (auto& c : s.cov) c /= (n - 1);
  return s;
}

Scalar frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  check_arg(a.dim == b.dim && a.dim > 0, "frechet_distance: dimension mismatch");
  const int d = a.dim;
  auto as_mat = [d](const std::vector<Scalar>& v) {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = v[static_cast<size_t>(i) * d + j];
    return Mat((m + m.transpose()) / 2);  // enforce symmetry
  };
  const Mat sa = as_mat(a.cov);
  const Mat sb = as_mat(b.cov);

  Scalar mean_term = 0;
  for (int i = 0; i < d; ++i) {
    const Scalar diff = a.mean[i] - b.mean[i];
    mean_term += diff * diff;
  }

  const Scalar clamp_tol = 1e-9 * std::max(1.0, sa.trace() + sb.trace());
  const Mat root_a = sqrtm_psd(sa, clamp_tol);
  Mat inner = root_a * sb * root_a;
  inner = (inner + inner.transpose()) / 2;
  const Mat cross = sqrtm_psd(inner, clamp_tol);
  return mean_term + sa.trace() + sb.trace() - 2 * cross.trace();
}

namespace {

class DownsampleEmbedder : public Embedder {
 public:
  std::vector<Scalar> embed(const Tensor& rgb) const override {
    check_arg(rgb.shape.n == 1 && rgb.shape.c == 3,
              "DownsampleEmbedder: expected [1,3,H,W]");
    const Tensor small = bilinear_resize(rgb, 8, 8);
    return {small.v.begin(), small.v.end()};
  }
  std::string name() const override { return "downsample"; }
};

class RandConvEmbedder : public Embedder {
 public:
  explicit RandConvEmbedder(uint64_t seed) : rng_(seed) {
    conv1_ = EqualizedConv::create(rng_, 3, 16, 3, 2, 1);
    conv2_ = EqualizedConv::create(rng_, 16, 32, 3, 2, 1);
    conv3_ = EqualizedConv::create(rng_, 32, 64, 3, 2, 1);
  }
  std::vector<Scalar> embed(const Tensor& rgb) const override {
    check_arg(rgb.shape.n == 1 && rgb.shape.c == 3,
              "RandConvEmbedder: expected [1,3,H,W]");
    Var x = constant(rgb);
    x = leaky_relu(conv1_.forward(x), kLeakySlope, leaky_gain());
    x = leaky_relu(conv2_.forward(x), kLeakySlope, leaky_gain());
    x = leaky_relu(conv3_.forward(x), kLeakySlope, leaky_gain());
    const Var pooled = reduce_sum_to(x, Shape(1, 64, 1, 1));
    const Scalar inv = 1.0 / (x->val.shape.h * x->val.shape.w);
    std::vector<Scalar> out(pooled->val.v.begin(), pooled->val.v.end());
    for (auto& v : out) v *= inv;
    return out;
  }
  std::string name() const override { return "randconv"; }

 private:
  Rng rng_;
  EqualizedConv conv1_, conv2_, conv3_;
};

}  // namespace

std::unique_ptr<Embedder> make_embedder(const std::string& kind, uint64_t seed) {
  if (kind == "downsample") return std::make_unique<DownsampleEmbedder>();
  if (kind == "randconv") return std::make_unique<RandConvEmbedder>(seed);
  throw std::invalid_argument("make_embedder: unknown embedder '" + kind + "'");
}

GeneratorPairSource::GeneratorPairSource(const Generator& g, Scalar theta_min_rad,
                                         Scalar theta_max_rad)
    : g_(g), lo_(theta_min_rad), hi_(theta_max_rad) {
  check_arg(lo_ < hi_, "GeneratorPairSource: bad angle range");
}

RotationPair GeneratorPairSource::sample(Rng& rng) {
  const Tensor z_d = Tensor::randn(Shape(1, g_.cfg.m, 1, 1), rng);
  const Tensor z_rgb = Tensor::randn(Shape(1, g_.cfg.m, 1, 1), rng);
  RotationPair pair;
  pair.theta1 = rng.uniform(lo_, hi_);
  pair.theta2 = rng.uniform(lo_, hi_);
  const NoiseBundle nd1 = g_.sample_noise(rng, 1);
  const NoiseBundle nr1 = g_.sample_noise(rng, 1);
  const NoiseBundle nd2 = g_.sample_noise(rng, 1);
  const NoiseBundle nr2 = g_.sample_noise(rng, 1);
  const GeneratedBatch v1 = g_.generate(z_d, z_rgb, {pair.theta1}, nd1, nr1);
  const GeneratedBatch v2 = g_.generate(z_d, z_rgb, {pair.theta2}, nd2, nr2);
  pair.rgb1 = v1.rgb->val;
  pair.depth1 = v1.depth->val;
  pair.rgb2 = v2.rgb->val;
  pair.depth2 = v2.depth->val;
  Scalar mean = 0;
  for (const Scalar v : pair.depth1.v) mean += v;
  pair.pivot = {0, 0, mean / pair.depth1.numel()};
  return pair;
}

ToyPairSource::ToyPairSource(const CameraIntrinsics& k, Scalar near, Scalar far,
                             Scalar theta_min_rad, Scalar theta_max_rad)
    : k_(k), near_(near), far_(far), lo_(theta_min_rad), hi_(theta_max_rad) {}

RotationPair ToyPairSource::sample(Rng& rng) {
  const SceneSpec scene = random_scene(rng);
  RotationPair pair;
  pair.theta1 = rng.uniform(lo_, hi_);
  pair.theta2 = rng.uniform(lo_, hi_);
  const RgbdImage v1 = render_scene(scene, pair.theta1, k_, near_, far_);
  const RgbdImage v2 = render_scene(scene, pair.theta2, k_, near_, far_);
  pair.rgb1 = v1.rgb;
  pair.depth1 = v1.depth.values;
  pair.rgb2 = v2.rgb;
  pair.depth2 = v2.depth.values;
  pair.pivot = scene.pivot();
  pair.exclude_silhouettes = true;
  return pair;
}

RotationMetrics rotation_metrics(PairSource& source, const CameraIntrinsics& k,
                                 Scalar near, Scalar far, int n_pairs, Rng& rng) {
  check_arg(n_pairs >= 1, "rotation_metrics: need at least one pair");
  RotationMetrics out;
  out.n_pairs = n_pairs;
  for (int i = 0; i < n_pairs; ++i) {
    const RotationPair pair = source.sample(rng);
    RgbdImage src;
    src.rgb = pair.rgb1;
    src.depth.values = pair.depth1;
    src.depth.near = near;
    src.depth.far = far;
    DepthMap tgt;
    tgt.values = pair.depth2;
    tgt.near = near;
    tgt.far = far;
    RotationSpec spec;
    spec.theta1 = pair.theta1;
    spec.theta2 = pair.theta2;
    spec.pivot = pair.pivot;
    const WarpResult warped = backward_warp(src, tgt, k, spec);

    Tensor mask = warped.mask;
    if (pair.exclude_silhouettes) {
      const Tensor keep =
          consistency_inclusion_mask(tgt, warped.rgbd.depth, 0.1, 2);
      for (int64_t j = 0; j < mask.numel(); ++j) mask.v[j] *= keep.v[j];
    }
    Scalar mask_sum = 0;
    for (const Scalar m : mask.v) mask_sum += m;
    if (mask_sum == 0) continue;  // fully invalid pair contributes zero

    Scalar depth_err = 0, rgb_err = 0;
    const int H = k.height, W = k.width;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        if (mask.at(0, 0, y, x) == 0) continue;
        depth_err += std::abs(warped.rgbd.depth.at(y, x) - pair.depth2.at(0, 0, y, x)) /
                     (far - near);
        for (int c = 0; c < 3; ++c)
          rgb_err += std::abs(warped.rgbd.rgb.at(0, c, y, x) -
                              pair.rgb2.at(0, c, y, x));
      }
    out.rp += depth_err / mask_sum;
    out.rc += rgb_err / (mask_sum * 3);
  }
  out.rp /= n_pairs;
  out.rc /= n_pairs;
  return out;
}

Scalar rotation_precision(PairSource& source, const CameraIntrinsics& k,
                          Scalar near, Scalar far, int n_pairs, Rng& rng) {
  return rotation_metrics(source, k, near, far, n_pairs, rng).rp;
}

Scalar rotation_consistency(PairSource& source, const CameraIntrinsics& k,
                            Scalar near, Scalar far, int n_pairs, Rng& rng) {
  return rotation_metrics(source, k, near, far, n_pairs, rng).rc;
}

DepthPredictionMetrics depth_prediction_metrics(const Discriminator& d,
                                                const RgbdBatch& real_heldout,
                                                const RgbdBatch& fake_set,
                                                Scalar near, Scalar far) {
  check_arg(real_heldout.rgb.shape.n >= 1, "depth_prediction_metrics: empty real set");
  check_arg(fake_set.rgb.shape.n >= 1, "depth_prediction_metrics: empty fake set");
  const int factor = d.cfg.resolution / d.branch_resolution();

  auto mean_ce = [&](const RgbdBatch& batch) {
    const int n = batch.rgb.shape.n;
    Scalar total = 0;
    const int chunk = 8;
    for (int start = 0; start < n; start += chunk) {
      const int count = std::min(chunk, n - start);
      Tensor rgb(Shape(count, 3, batch.rgb.shape.h, batch.rgb.shape.w));
      Tensor depth(Shape(count, 1, batch.depth.shape.h, batch.depth.shape.w));
      const int64_t rgb_plane = 3LL * batch.rgb.shape.h * batch.rgb.shape.w;
      const int64_t d_plane = 1LL * batch.depth.shape.h * batch.depth.shape.w;
      std::copy_n(batch.rgb.data() + start * rgb_plane, count * rgb_plane, rgb.data());
      std::copy_n(batch.depth.data() + start * d_plane, count * d_plane, depth.data());
      SwitchableInput in;
      in.rgb = constant(rgb);
      const Var logits = d.predict_depth(in);
      const Tensor target = quantize_depth(area_downsample(depth, factor),
                                           d.cfg.k_classes, near, far);
      total += depth_ce(logits, target)->val.item() * count;
    }
    return total / n;
  };

  DepthPredictionMetrics out;
  out.n_real = real_heldout.rgb.shape.n;
  out.n_fake = fake_set.rgb.shape.n;
  out.dp_real = mean_ce(real_heldout);
  out.dp_fake = mean_ce(fake_set);
  return out;
}

RgbdBatch generate_fake_batch(const Generator& g, int n, Rng& rng) {
  check_arg(n >= 1, "generate_fake_batch: need at least one sample");
  RgbdBatch out;
  out.near = g.cfg.near;
  out.far = g.cfg.far;
  out.rgb = Tensor::zeros(Shape(n, 3, g.cfg.resolution, g.cfg.resolution));
  out.depth = Tensor::zeros(Shape(n, 1, g.cfg.resolution, g.cfg.resolution));
  const int64_t rgb_plane = 3LL * g.cfg.resolution * g.cfg.resolution;
  const int64_t d_plane = 1LL * g.cfg.resolution * g.cfg.resolution;
  for (int i = 0; i < n; ++i) {
    const Tensor z_d = Tensor::randn(Shape(1, g.cfg.m, 1, 1), rng);
    const Tensor z_rgb = Tensor::randn(Shape(1, g.cfg.m, 1, 1), rng);
    const Scalar theta = rng.uniform(deg_to_rad(g.cfg.theta_min_deg),
                                     deg_to_rad(g.cfg.theta_max_deg));
    const NoiseBundle nd = g.sample_noise(rng, 1);
    const NoiseBundle nr = g.sample_noise(rng, 1);
    const GeneratedBatch b = g.generate(z_d, z_rgb, {theta}, nd, nr);
    std::copy_n(b.rgb->val.data(), rgb_plane, out.rgb.data() + i * rgb_plane);
    std::copy_n(b.depth->val.data(), d_plane, out.depth.data() + i * d_plane);
  }
  return out;
}

}  // namespace depthgan
