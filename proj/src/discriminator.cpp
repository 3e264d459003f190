#include "depthgan/discriminator.hpp"

#include <cmath>

namespace depthgan {

namespace {
bool power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }
}  // namespace

void DiscriminatorConfig::validate() const {
  check_arg(power_of_two(resolution) && resolution >= 16,
            "DiscriminatorConfig: resolution must be a power of two >= 16");
  int expected = 0;
  for (int r = resolution; r >= 4; r /= 2) ++expected;
  check_arg(levels() == expected,
            "DiscriminatorConfig: channel schedule must cover the input "
            "resolution down to 4^2");
  for (const int c : channels)
    check_arg(c >= 1, "DiscriminatorConfig: channel counts must be positive");
  check_arg(k_classes >= 2, "DiscriminatorConfig: k_classes must be >= 2");
  check_arg(branch_channels.size() == 3,
            "DiscriminatorConfig: need three branch stage widths");
  check_arg(final_dense >= 1, "DiscriminatorConfig: bad final_dense");
}

DiscBlock DiscBlock::create(Rng& rng, int ci, int co) {
  DiscBlock b;
  b.conv1 = EqualizedConv::create(rng, ci, ci, 3, 1, 1);
  b.conv2 = EqualizedConv::create(rng, ci, co, 3, 2, 1);
  b.skip = EqualizedConv::create(rng, ci, co, 1, 2, 0, 1.0, /*with_bias=*/false);
  return b;
}

Var DiscBlock::forward(const Var& x) const {
  Var h = leaky_relu(conv1.forward(x), kLeakySlope, leaky_gain());
  h = leaky_relu(conv2.forward(h), kLeakySlope, leaky_gain());
  return scale(add(h, skip.forward(x)), 1.0 / std::sqrt(2.0));
}

void DiscBlock::collect(const std::string& prefix, ParamList& out) const {
  conv1.collect(prefix + ".conv1", out);
  conv2.collect(prefix + ".conv2", out);
  skip.collect(prefix + ".skip", out);
}

BranchStage BranchStage::create(Rng& rng, int ci, int co) {
  BranchStage s;
  s.entry = EqualizedConv::create(rng, ci, co, 3, 1, 1);
  s.res1 = EqualizedConv::create(rng, co, co, 3, 1, 1);
  s.res2 = EqualizedConv::create(rng, co, co, 3, 1, 1);
  return s;
}

Var BranchStage::forward(const Var& x) const {
  Var h = leaky_relu(entry.forward(x), kLeakySlope, leaky_gain());
  Var r = res2.forward(leaky_relu(res1.forward(h), kLeakySlope, leaky_gain()));
  return add(h, r);
}

void BranchStage::collect(const std::string& prefix, ParamList& out) const {
  entry.collect(prefix + ".entry", out);
  res1.collect(prefix + ".res1", out);
  res2.collect(prefix + ".res2", out);
}

Discriminator Discriminator::create(const DiscriminatorConfig& cfg, Rng& rng) {
  cfg.validate();
  Discriminator d;
  d.cfg = cfg;
  d.gamma0 = EqualizedConv::create(rng, 3, cfg.channels[0], 1, 1, 0);
  d.gamma1 =
      EqualizedConv::create(rng, 1, cfg.channels[0], 1, 1, 0, 1.0, false);
  for (int i = 0; i + 1 < cfg.levels(); ++i)
    d.blocks.push_back(DiscBlock::create(rng, cfg.channels[i], cfg.channels[i + 1]));
  const int c4 = cfg.channels.back();
  d.final_conv = EqualizedConv::create(rng, c4, c4, 3, 1, 1);
  d.dense0 = EqualizedConv::create(rng, c4 * 16, cfg.final_dense, 1, 1, 0);
  d.dense1 = EqualizedConv::create(rng, cfg.final_dense, 1, 1, 1, 0);

  if (cfg.resolution >= 64) {
    // Taps sit at the three largest trunk resolutions strictly below the
    // input resolution: channels[3] (R/8), channels[2] (R/4), channels[1] (R/2).
    const int cs = cfg.channels[3], cm = cfg.channels[2], cb = cfg.channels[1];
    const auto& bc = cfg.branch_channels;
    d.branch.push_back(BranchStage::create(rng, cs, bc[0]));
    d.branch.push_back(BranchStage::create(rng, bc[0] + cm, bc[1]));
    d.branch.push_back(BranchStage::create(rng, bc[1] + cb, bc[2]));
    d.branch_head = EqualizedConv::create(rng, bc[2], cfg.k_classes, 1, 1, 0);
  }
  return d;
}

Var Discriminator::input_features_rgb(const Var& rgb) const {
  check_arg(rgb->val.shape.c == 3 && rgb->val.shape.h == cfg.resolution &&
                rgb->val.shape.w == cfg.resolution,
            "Discriminator: rgb input must be [N,3,R,R], got " +
                rgb->val.shape.str());
  return gamma0.forward(rgb);
}

Var Discriminator::input_features_depth(const Var& depth) const {
  check_arg(depth->val.shape.c == 1 && depth->val.shape.h == cfg.resolution &&
                depth->val.shape.w == cfg.resolution,
            "Discriminator: depth input must be [N,1,R,R], got " +
                depth->val.shape.str());
  return gamma1.forward(depth);
}

Var Discriminator::realness_from_input(const Var& summed) const {
  Var x = leaky_relu(summed, kLeakySlope, leaky_gain());
  for (const auto& block : blocks) x = block.forward(x);
  x = leaky_relu(final_conv.forward(x), kLeakySlope, leaky_gain());
  const int n = x->val.shape.n;
  x = reshape(x, Shape(n, x->val.shape.c * 16, 1, 1));
  x = leaky_relu(dense0.forward(x), kLeakySlope, leaky_gain());
  return dense1.forward(x);
}

Var Discriminator::score(const SwitchableInput& input) const {
  check_arg(input.depth.has_value(),
            "Discriminator::score: realness scoring needs the depth channel");
  const Var sum =
      add(input_features_rgb(input.rgb), input_features_depth(*input.depth));
  return realness_from_input(sum);
}

Var Discriminator::predict_depth(const SwitchableInput& input) const {
  check_arg(!input.depth.has_value(),
            "Discriminator::predict_depth: depth prediction takes RGB only "
            "(Gamma1 is disabled)");
  check_arg(cfg.resolution >= 64,
            "Discriminator::predict_depth: branch taps undefined below 64^2 "
            "input resolution");
  Var x = leaky_relu(input_features_rgb(input.rgb), kLeakySlope, leaky_gain());
  // Trunk features after each block; taps at R/2, R/4, R/8.
  std::vector<Var> feats;
  for (const auto& block : blocks) {
    x = block.forward(x);
    feats.push_back(x);
  }
  const Var f_big = feats[0], f_mid = feats[1], f_small = feats[2];
  Var b = branch[0].forward(f_small);
  b = branch[1].forward(concat_c({upsample2x(b), f_mid}));
  b = branch[2].forward(concat_c({upsample2x(b), f_big}));
  return branch_head.forward(b);
}

ParamList Discriminator::params() const {
  ParamList out;
  gamma0.collect("d.gamma0", out);
  gamma1.collect("d.gamma1", out);
  for (size_t i = 0; i < blocks.size(); ++i)
    blocks[i].collect("d.block" + std::to_string(i), out);
  final_conv.collect("d.final_conv", out);
  dense0.collect("d.dense0", out);
  dense1.collect("d.dense1", out);
  for (size_t i = 0; i < branch.size(); ++i)
    branch[i].collect("d.branch" + std::to_string(i), out);
  if (!branch.empty()) branch_head.collect("d.branch_head", out);
  return out;
}

}  // namespace depthgan
