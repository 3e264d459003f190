#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "depthgan/losses.hpp"
#include "depthgan/toy_scenes.hpp"
#include "test_util.hpp"

using namespace depthgan;
using doctest::Approx;

namespace {
Tensor randn(Shape s, uint64_t seed) {
  Rng rng(seed);
  return Tensor::randn(s, rng);
}
}  // namespace

TEST_CASE("adversarial losses: closed forms, limits, scalar oracle") {
  const Var zero = constant(Tensor::zeros(Shape(4, 1, 1, 1)));
  CHECK(adversarial_d(zero, zero)->val.item() == Approx(2 * std::log(2)).epsilon(1e-12));
  CHECK(adversarial_g(zero)->val.item() == Approx(std::log(2)).epsilon(1e-12));

  const Var big = constant(Tensor::full(Shape(4, 1, 1, 1), 200.0));
  const Var small = constant(Tensor::full(Shape(4, 1, 1, 1), -200.0));
  CHECK(adversarial_d(big, small)->val.item() == Approx(0.0).epsilon(1e-12));
  CHECK(adversarial_g(big)->val.item() == Approx(0.0).epsilon(1e-12));

  // random logits vs -log sigma(r) - log(1 - sigma(f))
  Rng rng(3);
  const Tensor r = randn(Shape(8, 1, 1, 1), 5);
  const Tensor f = randn(Shape(8, 1, 1, 1), 6);
  Scalar want_d = 0, want_g = 0;
  for (int i = 0; i < 8; ++i) {
    const Scalar sr = 1.0 / (1.0 + std::exp(-r.v[i]));
    const Scalar sf = 1.0 / (1.0 + std::exp(-f.v[i]));
    want_d += -std::log(sr) - std::log(1.0 - sf);
    want_g += -std::log(sf);
  }
  CHECK(adversarial_d(constant(r), constant(f))->val.item() ==
        Approx(want_d / 8).epsilon(1e-9));
  CHECK(adversarial_g(constant(f))->val.item() == Approx(want_g / 8).epsilon(1e-9));

  Tensor bad = r;
  bad.v[0] = std::numeric_limits<Scalar>::quiet_NaN();
  CHECK_THROWS_AS(adversarial_g(constant(bad)), std::runtime_error);
}

TEST_CASE("masked_l1: oracle, empty mask, shape errors") {
  const Tensor a = randn(Shape(1, 2, 4, 4), 11);
  const Tensor b = randn(Shape(1, 2, 4, 4), 12);
  Tensor mask(Shape(1, 1, 4, 4));
  Rng rng(13);
  for (auto& m : mask.v) m = rng.uniform() < 0.5 ? 1.0 : 0.0;

  Scalar num = 0, cnt = 0;
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        if (mask.at(0, 0, y, x) > 0)
          num += std::abs(a.at(0, c, y, x) - b.at(0, c, y, x));
  for (const Scalar m : mask.v) cnt += m;
  const Scalar want = num / std::max(1.0, cnt * 2);
  CHECK(masked_l1(constant(a), constant(b), mask)->val.item() ==
        Approx(want).epsilon(1e-12));

  CHECK(masked_l1(constant(a), constant(a), mask)->val.item() == 0.0);
  CHECK(masked_l1(constant(a), constant(b), Tensor::zeros(Shape(1, 1, 4, 4)))
            ->val.item() == 0.0);
  CHECK_THROWS_AS(
      masked_l1(constant(a), constant(randn(Shape(1, 2, 4, 5), 3)), mask),
      std::invalid_argument);
}

TEST_CASE("quantize_depth: bin edges and the scalar oracle") {
  const Scalar near = 0.5, far = 10.0;
  Tensor d(Shape(1, 1, 1, 3));
  d.v = {near, far, near + (far - near) * 0.35};
  const Tensor q = quantize_depth(d, 10, near, far);
  CHECK(q.v[0] == 0.0);
  CHECK(q.v[1] == 9.0);
  CHECK(q.v[2] == 3.0);

  Rng rng(7);
  Tensor r(Shape(2, 1, 5, 5));
  for (auto& v : r.v) v = rng.uniform(near, far);
  const Tensor qr = quantize_depth(r, 10, near, far);
  for (int64_t i = 0; i < r.numel(); ++i) {
    const int want = std::min(
        9, static_cast<int>(std::floor((r.v[i] - near) / (far - near) * 10)));
    CHECK(qr.v[i] == static_cast<Scalar>(want));
  }

  // out-of-range clamps and counts
  Tensor oob(Shape(1, 1, 1, 2));
  oob.v = {0.1, 11.0};
  int64_t clamped = 0;
  const Tensor qo = quantize_depth(oob, 10, near, far, &clamped);
  CHECK(clamped == 2);
  CHECK(qo.v[0] == 0.0);
  CHECK(qo.v[1] == 9.0);
}

TEST_CASE("depth_ce: uniform logits give ln k, confident logits give 0") {
  const int k = 10;
  Tensor logits = Tensor::zeros(Shape(1, k, 4, 4));
  Tensor target(Shape(1, 1, 4, 4));
  Rng rng(9);
  for (auto& t : target.v) t = static_cast<Scalar>(rng.uniform_index(k));
  CHECK(depth_ce(constant(logits), target)->val.item() ==
        Approx(std::log(10.0)).epsilon(1e-12));

  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      logits.at(0, static_cast<int>(target.at(0, 0, y, x)), y, x) = 500.0;
  CHECK(depth_ce(constant(logits), target)->val.item() == Approx(0.0).epsilon(1e-9));

  // random logits vs the per-pixel oracle
  const Tensor rl = randn(Shape(1, k, 4, 4), 31);
  Scalar want = 0;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      Scalar z = 0;
      for (int c = 0; c < k; ++c) z += std::exp(rl.at(0, c, y, x));
      want += -std::log(
          std::exp(rl.at(0, static_cast<int>(target.at(0, 0, y, x)), y, x)) / z);
    }
  CHECK(depth_ce(constant(rl), target)->val.item() == Approx(want / 16).epsilon(1e-9));
}

TEST_CASE("r1 penalty: constant and linear discriminators") {
  // constant score: zero penalty
  {
    const Var x = leaf(randn(Shape(2, 1, 2, 2), 41));
    const Var s = add(mean_all(mul(x, constant(Tensor::zeros(Shape(2, 1, 2, 2))))),
                      constant_scalar(3.0));
    const Var pen = r1_penalty_from_scores(sum_all(s), {x}, 0.7);
    CHECK(pen->val.item() == Approx(0.0).epsilon(1e-15));
  }
  // linear score <a, x> per sample: penalty = (w/2) ||a||^2
  {
    const Tensor a = randn(Shape(1, 1, 3, 3), 42);
    const Var x = leaf(randn(Shape(4, 1, 3, 3), 43));
    const Var s = reduce_sum_to(mul(x, constant(a)), Shape(4, 1, 1, 1));
    const Var pen = r1_penalty_from_scores(sum_all(s), {x}, 0.7);
    Scalar norm2 = 0;
    for (const Scalar v : a.v) norm2 += v * v;
    CHECK(pen->val.item() == Approx(0.7 / 2 * norm2).epsilon(1e-12));
  }
}

TEST_CASE("r1 penalty on a small net matches finite differences of the cost") {
  Rng rng(47);
  DiscriminatorConfig cfg;
  cfg.resolution = 16;
  cfg.channels = {6, 8, 8};
  cfg.k_classes = 10;
  cfg.final_dense = 8;
  Discriminator d = Discriminator::create(cfg, rng);
  const Tensor rgb = randn(Shape(2, 3, 16, 16), 51);
  const Tensor depth = randn(Shape(2, 1, 16, 16), 52);

  auto penalty_value = [&] { return r1_penalty(d, rgb, depth, 0.3)->val.item(); };

  const Var pen = r1_penalty(d, rgb, depth, 0.3);
  const GradMap grads = backward(pen);

  ParamList params = d.params();
  Rng pick(5);
  const double eps = 1e-5;
  double max_rel = 0;
  int checked = 0;
  while (checked < 50) {
    auto& p = params[pick.uniform_index(params.size())];
    const int64_t i = static_cast<int64_t>(pick.uniform_index(p.var->val.numel()));
    const Tensor analytic = grad_or_zero(grads, p.var);
    const double orig = p.var->val.v[i];
    p.var->val.v[i] = orig + eps;
    const double up = penalty_value();
    p.var->val.v[i] = orig - eps;
    const double dn = penalty_value();
    p.var->val.v[i] = orig;
    const double fd = (up - dn) / (2 * eps);
    const double an = analytic.v[i];
    if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
    max_rel = std::max(max_rel,
                       std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8}));
    ++checked;
  }
  CHECK(max_rel < 1e-3);
}

TEST_CASE("rotation losses: zero at identical geometry, oracle bound on toy pairs") {
  const CameraIntrinsics k = intrinsics_from_focal(26, 36, 32, 32);
  const Scalar near = 0.5, far = 10.0;

  SUBCASE("theta1 == theta2 with identical samples gives (0, 0)") {
    Rng rng(61);
    Tensor rgb = randn(Shape(1, 3, 32, 32), 62);
    Tensor depth(Shape(1, 1, 32, 32));
    for (auto& v : depth.v) v = rng.uniform(near, far);
    const auto losses = rotation_losses(constant(rgb), constant(depth),
                                        constant(rgb), constant(depth), k,
                                        {0.12}, {0.12}, {{0, 0, 4.0}}, near, far);
    CHECK(losses.depth->val.item() == Approx(0.0).epsilon(1e-12));
    CHECK(losses.rgb->val.item() == Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("ground-truth pair at 10 degrees stays within the geometric bound") {
    Rng rng(63);
    const SceneSpec scene = random_scene(rng);
    const Scalar t1 = deg_to_rad(-5), t2 = deg_to_rad(5);
    const RgbdImage v1 = render_scene(scene, t1, k, near, far);
    const RgbdImage v2 = render_scene(scene, t2, k, near, far);
    const auto losses = rotation_losses(
        constant(v1.rgb), constant(v1.depth.values), constant(v2.rgb),
        constant(v2.depth.values), k, {t1}, {t2}, {scene.pivot()}, near, far);
    // silhouettes included, so the bound is looser than the masked variant
    CHECK(losses.depth->val.item() <= 0.02);
    CHECK(losses.rgb->val.item() > 0.0);
  }

  SUBCASE("mismatched scenes give strictly positive losses") {
    Rng rng(67);
    const SceneSpec s1 = random_scene(rng);
    const SceneSpec s2 = random_scene(rng);
    const Scalar t1 = deg_to_rad(-4), t2 = deg_to_rad(7);
    const RgbdImage v1 = render_scene(s1, t1, k, near, far);
    const RgbdImage v2 = render_scene(s2, t2, k, near, far);
    const auto losses = rotation_losses(
        constant(v1.rgb), constant(v1.depth.values), constant(v2.rgb),
        constant(v2.depth.values), k, {t1}, {t2}, {s1.pivot()}, near, far);
    CHECK(losses.depth->val.item() > 0.005);
    CHECK(losses.rgb->val.item() > 0.005);
  }
}

TEST_CASE("totals: paper weights, linearity, zero-lambda reduction") {
  LossWeights w;  // 128^2 values
  CHECK(w.lambda1 == 50.0);
  CHECK(w.lambda2 == 0.3);
  CHECK(w.lambda3 == 1e-3);
  CHECK(w.lambda4 == 0.8);

  const Var adv_g = constant_scalar(0.9);
  const Var adv_d = constant_scalar(1.1);
  const Var d_rot = constant_scalar(0.2);
  const Var rgb_rot = constant_scalar(0.4);
  const Var f_dp = constant_scalar(2.0);
  const Var r_dp = constant_scalar(1.5);

  const TotalLosses t = totals(adv_g, adv_d, d_rot, rgb_rot, f_dp, r_dp, w);
  CHECK(t.l_gd->val.item() == Approx(0.9 + 50 * 0.2).epsilon(1e-12));
  CHECK(t.l_grgb->val.item() == Approx(0.9 + 0.3 * 0.4 + 1e-3 * 2.0).epsilon(1e-12));
  CHECK(t.l_d->val.item() == Approx(1.1 + 0.8 * 1.5).epsilon(1e-12));

  LossWeights zero;
  zero.lambda1 = zero.lambda2 = zero.lambda3 = zero.lambda4 = 0;
  const TotalLosses tz = totals(adv_g, adv_d, d_rot, rgb_rot, f_dp, r_dp, zero);
  CHECK(tz.l_gd->val.item() == Approx(0.9));
  CHECK(tz.l_grgb->val.item() == Approx(0.9));
  CHECK(tz.l_d->val.item() == Approx(1.1));

  LossWeights dbl = w;
  dbl.lambda1 *= 2;
  const TotalLosses td = totals(adv_g, adv_d, d_rot, rgb_rot, f_dp, r_dp, dbl);
  CHECK(td.l_gd->val.item() - adv_g->val.item() ==
        Approx(2 * (t.l_gd->val.item() - adv_g->val.item())).epsilon(1e-12));
}
