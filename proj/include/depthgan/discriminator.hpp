#pragma once

#include <optional>
#include <vector>

#include "depthgan/nn.hpp"

namespace depthgan {

struct DiscriminatorConfig {
  int resolution = 64;
  std::vector<int> channels;  // at resolutions R, R/2, ..., 4 (inclusive)
  int k_classes = 10;
  std::vector<int> branch_channels = {32, 24, 16};  // small -> large stages
  int final_dense = 64;

  int levels() const { return static_cast<int>(channels.size()); }
  void validate() const;
};

// 4-channel realness input, or 3-channel RGB for depth prediction.
struct SwitchableInput {
  Var rgb;                    // [N,3,R,R]
  std::optional<Var> depth;   // [N,1,R,R]
};

// Residual downsampling block (conv, strided conv, 1x1 strided skip).
struct DiscBlock {
  EqualizedConv conv1, conv2, skip;

  static DiscBlock create(Rng& rng, int ci, int co);
  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct BranchStage {
  EqualizedConv entry;       // conv3x3 + lrelu
  EqualizedConv res1, res2;  // two-layer conv with residual connection

  static BranchStage create(Rng& rng, int ci, int co);
  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

// Switchable discriminator: RGBD realness scoring and RGB depth prediction
// over one shared trunk. The input layer adapts: Gamma0 reads RGB, Gamma1
// reads depth, and their feature maps are summed when both are present.
struct Discriminator {
  DiscriminatorConfig cfg;
  EqualizedConv gamma0;  // 3 -> C0, 1x1
  EqualizedConv gamma1;  // 1 -> C0, 1x1, bias-free
  std::vector<DiscBlock> blocks;
  EqualizedConv final_conv;
  EqualizedConv dense0, dense1;
  std::vector<BranchStage> branch;  // 3 stages, smallest tap first
  EqualizedConv branch_head;        // 1x1 -> k classes

  static Discriminator create(const DiscriminatorConfig& cfg, Rng& rng);

  // Exposed seams for the input-layer additivity checks.
  Var input_features_rgb(const Var& rgb) const;
  Var input_features_depth(const Var& depth) const;
  // Realness logit from already-summed input features (pre-activation).
  Var realness_from_input(const Var& summed) const;

  // Scalar realness logit per sample, [N,1,1,1]. Depth must be present.
  Var score(const SwitchableInput& input) const;

  // k-channel logits at resolution R/2 from an RGB-only input. Depth must be
  // absent and the configured resolution at least 64.
  Var predict_depth(const SwitchableInput& input) const;

  int branch_resolution() const { return cfg.resolution / 2; }

  ParamList params() const;
};

}  // namespace depthgan
