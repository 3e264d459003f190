#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "depthgan/discriminator.hpp"
#include "test_util.hpp"

using namespace depthgan;
using doctest::Approx;

namespace {

DiscriminatorConfig tiny_config(int resolution = 64) {
  DiscriminatorConfig cfg;
  cfg.resolution = resolution;
  cfg.channels.clear();
  for (int r = resolution; r >= 4; r /= 2) cfg.channels.push_back(r <= 8 ? 16 : 8);
  cfg.k_classes = 10;
  cfg.branch_channels = {12, 10, 8};
  cfg.final_dense = 16;
  return cfg;
}

Tensor randn(Shape s, uint64_t seed) {
  Rng rng(seed);
  return Tensor::randn(s, rng);
}

}  // namespace

TEST_CASE("score: shape, determinism, and the missing-depth contract") {
  Rng rng(3);
  const Discriminator d = Discriminator::create(tiny_config(), rng);
  SwitchableInput in;
  in.rgb = constant(randn(Shape(4, 3, 64, 64), 1));
  in.depth = constant(randn(Shape(4, 1, 64, 64), 2));
  const Var s1 = d.score(in);
  const Var s2 = d.score(in);
  CHECK(s1->val.shape == Shape(4, 1, 1, 1));
  CHECK(testutil::max_abs_diff(s1->val, s2->val) == 0.0);

  SwitchableInput no_depth;
  no_depth.rgb = in.rgb;
  CHECK_THROWS_AS(d.score(no_depth), std::invalid_argument);
}

TEST_CASE("zeroed Gamma1 makes the score independent of the depth channel") {
  Rng rng(5);
  Discriminator d = Discriminator::create(tiny_config(), rng);
  for (auto& v : d.gamma1.weight->val.v) v = 0;
  SwitchableInput a, b;
  a.rgb = b.rgb = constant(randn(Shape(2, 3, 64, 64), 7));
  a.depth = constant(randn(Shape(2, 1, 64, 64), 8));
  b.depth = constant(randn(Shape(2, 1, 64, 64), 9));
  CHECK(testutil::max_abs_diff(d.score(a)->val, d.score(b)->val) == 0.0);
}

TEST_CASE("input-layer additivity: score == trunk(Gamma0(rgb) + Gamma1(depth))") {
  Rng rng(11);
  const Discriminator d = Discriminator::create(tiny_config(), rng);
  const Var rgb = constant(randn(Shape(2, 3, 64, 64), 12));
  const Var depth = constant(randn(Shape(2, 1, 64, 64), 13));
  SwitchableInput in;
  in.rgb = rgb;
  in.depth = depth;
  const Var direct = d.score(in);
  const Var summed = add(d.input_features_rgb(rgb), d.input_features_depth(depth));
  const Var via_sum = d.realness_from_input(summed);
  CHECK(testutil::max_abs_diff(direct->val, via_sum->val) == 0.0);
}

TEST_CASE("predict_depth: k channels at half resolution, softmax sums to one") {
  Rng rng(17);
  const Discriminator d = Discriminator::create(tiny_config(128), rng);
  SwitchableInput in;
  in.rgb = constant(randn(Shape(2, 3, 128, 128), 21));
  const Var logits = d.predict_depth(in);
  CHECK(logits->val.shape == Shape(2, 10, 64, 64));

  for (int n = 0; n < 2; ++n)
    for (int p = 0; p < 8; ++p) {
      Scalar z = 0;
      for (int c = 0; c < 10; ++c) z += std::exp(logits->val.at(n, c, p, 3 * p));
      Scalar total = 0;
      for (int c = 0; c < 10; ++c)
        total += std::exp(logits->val.at(n, c, p, 3 * p)) / z;
      CHECK(total == Approx(1.0).epsilon(1e-6));
    }

  const Var again = d.predict_depth(in);
  CHECK(testutil::max_abs_diff(logits->val, again->val) == 0.0);

  SwitchableInput with_depth;
  with_depth.rgb = in.rgb;
  with_depth.depth = constant(randn(Shape(2, 1, 128, 128), 22));
  CHECK_THROWS_AS(d.predict_depth(with_depth), std::invalid_argument);
}

TEST_CASE("predict_depth rejects resolutions below 64") {
  Rng rng(19);
  const Discriminator d = Discriminator::create(tiny_config(32), rng);
  SwitchableInput in;
  in.rgb = constant(randn(Shape(1, 3, 32, 32), 23));
  CHECK_THROWS_AS(d.predict_depth(in), std::invalid_argument);
}

TEST_CASE("mode exclusivity: predict_depth is invariant to Gamma1") {
  Rng rng(23);
  Discriminator d = Discriminator::create(tiny_config(), rng);
  SwitchableInput in;
  in.rgb = constant(randn(Shape(1, 3, 64, 64), 31));
  const Tensor before = d.predict_depth(in)->val;
  for (auto& v : d.gamma1.weight->val.v) v = 42.0;
  const Tensor after = d.predict_depth(in)->val;
  CHECK(testutil::max_abs_diff(before, after) == 0.0);
}

TEST_CASE("R1-style input gradients match finite differences") {
  Rng rng(29);
  const Discriminator d = Discriminator::create(tiny_config(), rng);
  const Tensor rgb = randn(Shape(1, 3, 64, 64), 41);
  const Tensor depth = randn(Shape(1, 1, 64, 64), 42);

  const Var rgb_leaf = leaf(rgb);
  const Var depth_leaf = leaf(depth);
  SwitchableInput in;
  in.rgb = rgb_leaf;
  in.depth = depth_leaf;
  const GradMap grads = backward(sum_all(d.score(in)));
  const Tensor g_rgb = grad_or_zero(grads, rgb_leaf);
  const Tensor g_depth = grad_or_zero(grads, depth_leaf);

  auto score_at = [&](const Tensor& r, const Tensor& dd) {
    SwitchableInput probe;
    probe.rgb = constant(r);
    probe.depth = constant(dd);
    return d.score(probe)->val.item();
  };

  Rng pick(7);
  const double eps = 1e-5;
  double max_rel = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const bool on_rgb = trial % 2 == 0;
    Tensor base = on_rgb ? rgb : depth;
    const int64_t i = static_cast<int64_t>(pick.uniform_index(base.numel()));
    Tensor up = base, dn = base;
    up.v[i] += eps;
    dn.v[i] -= eps;
    const double fd = on_rgb
                          ? (score_at(up, depth) - score_at(dn, depth)) / (2 * eps)
                          : (score_at(rgb, up) - score_at(rgb, dn)) / (2 * eps);
    const double an = on_rgb ? g_rgb.v[i] : g_depth.v[i];
    max_rel = std::max(max_rel, std::abs(fd - an) /
                                    std::max({std::abs(fd), std::abs(an), 1e-8}));
  }
  CHECK(max_rel < 1e-3);
}
