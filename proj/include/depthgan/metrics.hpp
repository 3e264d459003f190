#pragma once

#include <memory>
#include <string>
#include <vector>

#include "depthgan/discriminator.hpp"
#include "depthgan/generator.hpp"
#include "depthgan/toy_scenes.hpp"

namespace depthgan {

// ---- Fréchet distance over Gaussian embedding statistics ----

struct GaussianStats {
  int dim = 0;
  std::vector<Scalar> mean;  // dim
  std::vector<Scalar> cov;   // dim x dim, row-major, symmetric
};

// Sample mean and covariance (n-1 denominator); needs at least two samples.
GaussianStats embedding_stats(const std::vector<std::vector<Scalar>>& embeddings);

// ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}), the matrix square root
// taken via symmetric eigendecomposition of Sa^{1/2} Sb Sa^{1/2} with small
// negative eigenvalues clamped to zero.
Scalar frechet_distance(const GaussianStats& a, const GaussianStats& b);

// ---- pluggable image embedders ----

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<Scalar> embed(const Tensor& rgb) const = 0;  // [1,3,H,W]
  virtual std::string name() const = 0;
};

// kinds: "downsample" (bilinear 8x8 flatten) or "randconv" (fixed-seed
// strided convnet with global average pooling).
std::unique_ptr<Embedder> make_embedder(const std::string& kind, uint64_t seed);

// ---- rotation metrics ----

// One evaluation pair: two views of the same underlying content.
struct RotationPair {
  Tensor rgb1, depth1;  // [1,3,H,W], [1,1,H,W] (camera units)
  Tensor rgb2, depth2;
  Scalar theta1 = 0, theta2 = 0;
  Vec3 pivot;
  bool exclude_silhouettes = false;  // toy ground truth knows its edges
};

class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual RotationPair sample(Rng& rng) = 0;
};

// Pairs drawn from the generator: shared latent codes, independent angles,
// per-pair noise; pivot at the mean of the first view's depth.
class GeneratorPairSource : public PairSource {
 public:
  GeneratorPairSource(const Generator& g, Scalar theta_min_rad,
                      Scalar theta_max_rad);
  RotationPair sample(Rng& rng) override;

 private:
  const Generator& g_;
  Scalar lo_, hi_;
};

// Pairs rendered from random toy scenes with the exact pivot; the geometric
// floor for any generator.
class ToyPairSource : public PairSource {
 public:
  ToyPairSource(const CameraIntrinsics& k, Scalar near, Scalar far,
                Scalar theta_min_rad, Scalar theta_max_rad);
  RotationPair sample(Rng& rng) override;

 private:
  CameraIntrinsics k_;
  Scalar near_, far_, lo_, hi_;
};

struct RotationMetrics {
  Scalar rp = 0;  // masked L1 on [0,1]-normalized depth
  Scalar rc = 0;  // masked L1 on [-1,1] rgb
  int n_pairs = 0;
};

RotationMetrics rotation_metrics(PairSource& source, const CameraIntrinsics& k,
                                 Scalar near, Scalar far, int n_pairs, Rng& rng);

Scalar rotation_precision(PairSource& source, const CameraIntrinsics& k,
                          Scalar near, Scalar far, int n_pairs, Rng& rng);
Scalar rotation_consistency(PairSource& source, const CameraIntrinsics& k,
                            Scalar near, Scalar far, int n_pairs, Rng& rng);

// ---- depth-prediction metrics ----

struct DepthPredictionMetrics {
  Scalar dp_real = 0;
  Scalar dp_fake = 0;
  int n_real = 0, n_fake = 0;
};

// dp_real: branch cross-entropy on held-out real pairs. dp_fake: branch
// prediction on generated RGB against the quantized generated depth (the
// desk-scale stand-in for an external depth predictor).
DepthPredictionMetrics depth_prediction_metrics(const Discriminator& d,
                                                const RgbdBatch& real_heldout,
                                                const RgbdBatch& fake_set,
                                                Scalar near, Scalar far);

// Generates a fake batch for metric evaluation (values only, no graph kept).
RgbdBatch generate_fake_batch(const Generator& g, int n, Rng& rng);

}  // namespace depthgan
