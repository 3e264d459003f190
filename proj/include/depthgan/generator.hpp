#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "depthgan/camera.hpp"
#include "depthgan/nn.hpp"

namespace depthgan {

struct GeneratorConfig {
  int m = 128;                // latent / style width
  int t = 4;                  // max angle-encoding frequency
  int mapping_layers = 2;
  int resolution = 64;
  std::vector<int> channels;  // per level: 4^2, 8^2, ..., resolution^2
  Scalar near = 0.5, far = 10.0;
  Scalar theta_min_deg = -15.0, theta_max_deg = 15.0;

  int levels() const { return static_cast<int>(channels.size()); }
  int n_convs() const { return 1 + 2 * (levels() - 1); }
  void validate() const;
};

// One latent draw: independent depth and appearance codes plus the angle.
struct LatentPair {
  Tensor z_d;    // [1,m,1,1]
  Tensor z_rgb;  // [1,m,1,1]
  Scalar theta = 0;  // radians
};

// Per-conv single-channel noise planes for one synthesis path.
struct NoiseBundle {
  std::vector<Tensor> layers;
};

// (sin th, cos th, ..., sin t*th, cos t*th) rows for a batch of angles.
Tensor angle_features(const std::vector<Scalar>& thetas, int t);

// Element-wise w' = w * gamma (Eq. of the angle injection).
Var inject_angle(const Var& w, const Var& gamma);

struct DepthPathOutput {
  Var depth;                    // [N,1,R,R] in [near, far]
  std::vector<Var> psi;         // per-level feature maps
  Var w;                        // mapped latent [N,m,1,1]
  Var w_prime;                  // angle-injected variant
  std::vector<Var> conv_inputs; // test probe: the input seen by each conv
};

// Depth generator G_d: mapping, angle encoding, and the style-modulated
// synthesis stack. The first two modulated convolutions use w', the rest w.
struct DepthPath {
  GeneratorConfig cfg;
  MappingNetwork mapping;
  EqualizedConv angle_fc1, angle_fc2;  // h: R^{2t} -> R^m, two layers
  Var const_input;                     // [1,C0,4,4]
  std::vector<ModulatedConv> convs;
  std::vector<NoiseInject> noises;
  ModulatedConv head;                  // 1x1 -> 1 channel, no demodulation

  static DepthPath create(const GeneratorConfig& cfg, Rng& rng);

  Var encode_angle(const std::vector<Scalar>& thetas) const;
  // overrides (test seam): replaces the input of conv i before it runs.
  DepthPathOutput forward(
      const Var& z_d, const std::vector<Scalar>& thetas, const NoiseBundle& noise,
      const std::unordered_map<int, Tensor>* overrides = nullptr) const;
  // Synthesis from an already-mapped style (w-space interpolation).
  DepthPathOutput forward_from_w(const Var& w, const std::vector<Scalar>& thetas,
                                 const NoiseBundle& noise) const;

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  DepthPathOutput run_synthesis(
      const Var& w, const std::vector<Scalar>& thetas, const NoiseBundle& noise,
      const std::unordered_map<int, Tensor>* overrides) const;
};

// Two-layer fusion of depth features into the appearance stream (channel
// concat, then convs back down to the appearance width).
struct FusionBlock {
  EqualizedConv conv1;  // 3x3, (C_psi + C_phi) -> C_phi
  EqualizedConv conv2;  // 1x1, C_phi -> C_phi

  static FusionBlock create(Rng& rng, int c_psi, int c_phi);
  Var forward(const Var& psi, const Var& phi) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct RgbPathOutput {
  Var rgb;  // [N,3,R,R] in [-1,1]
  Var w;
};

// Appearance renderer G_rgb: same synthesis skeleton, no angle input, each
// level's features are replaced by the fused features before the next level.
struct RgbPath {
  GeneratorConfig cfg;
  MappingNetwork mapping;
  Var const_input;
  std::vector<ModulatedConv> convs;
  std::vector<NoiseInject> noises;
  std::vector<FusionBlock> fusions;  // one per level
  ModulatedConv head;                // 1x1 -> 3 channels

  static RgbPath create(const GeneratorConfig& cfg, Rng& rng);
  RgbPathOutput forward(const Var& z_rgb, const std::vector<Var>& psi,
                        const NoiseBundle& noise) const;
  RgbPathOutput forward_from_w(const Var& w, const std::vector<Var>& psi,
                               const NoiseBundle& noise) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  RgbPathOutput run_synthesis(const Var& w, const std::vector<Var>& psi,
                              const NoiseBundle& noise) const;
};

struct GeneratedBatch {
  Var rgb;
  Var depth;
  std::vector<Var> psi;
  Var w_d, w_rgb;
};

struct Generator {
  GeneratorConfig cfg;
  DepthPath depth_path;
  RgbPath rgb_path;

  static Generator create(const GeneratorConfig& cfg, Rng& rng);

  NoiseBundle sample_noise(Rng& rng, int batch) const;
  NoiseBundle zero_noise(int batch) const;

  // detach_condition severs the appearance stream (and hence its losses)
  // from the depth path, as the phase-3 update requires.
  GeneratedBatch generate(const Tensor& z_d, const Tensor& z_rgb,
                          const std::vector<Scalar>& thetas,
                          const NoiseBundle& noise_d, const NoiseBundle& noise_rgb,
                          bool detach_condition = false) const;

  // Single-sample convenience used by evaluation and the CLI.
  RgbdImage generate_image(const LatentPair& pair, uint64_t noise_seed) const;
  // As above, but from already-mapped styles [1,m,1,1].
  RgbdImage generate_image_from_w(const Tensor& w_d, const Tensor& w_rgb,
                                  Scalar theta, uint64_t noise_seed) const;

  ParamList depth_params() const;  // everything phase 2 may touch
  ParamList rgb_params() const;    // everything phase 3 may touch
};

}  // namespace depthgan
