#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "depthgan/trainer.hpp"
#include "test_util.hpp"

using namespace depthgan;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

GeneratorConfig small_gcfg() {
  GeneratorConfig cfg;
  cfg.m = 16;
  cfg.t = 4;
  cfg.mapping_layers = 2;
  cfg.resolution = 64;
  cfg.channels = {16, 16, 12, 8, 6};
  cfg.near = 0.5;
  cfg.far = 10.0;
  return cfg;
}

DiscriminatorConfig small_dcfg() {
  DiscriminatorConfig cfg;
  cfg.resolution = 64;
  cfg.channels = {6, 8, 12, 16, 16};
  cfg.k_classes = 10;
  cfg.branch_channels = {10, 8, 6};
  cfg.final_dense = 16;
  return cfg;
}

TrainConfig small_tcfg() {
  TrainConfig cfg;
  cfg.batch = 2;
  cfg.lr = 1.5e-3;
  cfg.total_steps = 4;
  cfg.seed = 11;
  return cfg;
}

const DatasetManifest& shared_dataset() {
  static DatasetManifest manifest = [] {
    const fs::path dir = fs::temp_directory_path() / "dg_trainer_data";
    fs::remove_all(dir);
    const CameraIntrinsics k = intrinsics_from_focal(26, 36, 64, 64);
    return generate_dataset(8, 2, 123, dir.string(), k, 0.5, 10.0,
                            deg_to_rad(-15), deg_to_rad(15));
  }();
  return manifest;
}

uint64_t hash_params(const ParamList& params) {
  uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params)
    for (const Scalar v : p.var->val.v) {
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 1099511628211ULL;
      }
    }
  return h;
}

}  // namespace

TEST_CASE("sample_angles: bounds, mean, reproducibility") {
  Rng rng(3);
  const Scalar lo = deg_to_rad(-15), hi = deg_to_rad(15);
  Scalar mean = 0;
  Scalar min_seen = 1e9, max_seen = -1e9;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto [t1, t2] = sample_angles(rng, lo, hi);
    for (const Scalar t : {t1, t2}) {
      CHECK(t >= lo);
      CHECK(t <= hi);
      mean += t;
      min_seen = std::min(min_seen, t);
      max_seen = std::max(max_seen, t);
    }
  }
  mean /= 2 * n;
  // 3 sigma of the sample mean of U(lo, hi)
  const Scalar sigma = (hi - lo) / std::sqrt(12.0) / std::sqrt(2.0 * n);
  CHECK(std::abs(mean - 0.0) <= 3 * sigma);

  Rng r1(77), r2(77);
  for (int i = 0; i < 100; ++i) {
    const auto a = sample_angles(r1, lo, hi);
    const auto b = sample_angles(r2, lo, hi);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
}

TEST_CASE("phase isolation: each phase touches exactly one parameter group") {
  Trainer trainer(small_gcfg(), small_dcfg(), small_tcfg(), shared_dataset());
  const RgbdBatch real = trainer.next_batch();

  ParamList gd = trainer.generator().depth_params();
  ParamList grgb = trainer.generator().rgb_params();
  ParamList d = trainer.discriminator().params();

  for (int step = 0; step < 3; ++step) {
    uint64_t h_gd = hash_params(gd), h_grgb = hash_params(grgb), h_d = hash_params(d);
    trainer.run_phase1_adversarial();
    CHECK(hash_params(gd) != h_gd);      // both generator paths move
    CHECK(hash_params(grgb) != h_grgb);
    CHECK(hash_params(d) == h_d);        // discriminator untouched

    h_gd = hash_params(gd);
    h_grgb = hash_params(grgb);
    h_d = hash_params(d);
    trainer.run_phase2_depth_rotation();
    CHECK(hash_params(gd) != h_gd);
    CHECK(hash_params(grgb) == h_grgb);  // appearance path bitwise unchanged
    CHECK(hash_params(d) == h_d);

    h_gd = hash_params(gd);
    h_grgb = hash_params(grgb);
    trainer.run_phase3_rgb();
    CHECK(hash_params(gd) == h_gd);      // depth path bitwise unchanged
    CHECK(hash_params(grgb) != h_grgb);
    CHECK(hash_params(d) == h_d);

    h_grgb = hash_params(grgb);
    trainer.run_phase4_discriminator(real);
    CHECK(hash_params(gd) == h_gd);
    CHECK(hash_params(grgb) == h_grgb);
    CHECK(hash_params(d) != h_d);
  }
}

TEST_CASE("fixed seed reproduces the loss trajectory exactly") {
  std::vector<std::string> log_a, log_b;
  for (auto* log : {&log_a, &log_b}) {
    Trainer trainer(small_gcfg(), small_dcfg(), small_tcfg(), shared_dataset());
    trainer.set_metric_sink([log](int64_t step, const std::string& name, Scalar v) {
      char line[128];
      std::snprintf(line, sizeof(line), "%lld\t%s\t%.17g",
                    static_cast<long long>(step), name.c_str(), v);
      log->push_back(line);
    });
    for (int i = 0; i < 3; ++i) trainer.train_step();
  }
  REQUIRE(log_a.size() == log_b.size());
  for (size_t i = 0; i < log_a.size(); ++i) CHECK(log_a[i] == log_b[i]);
}

TEST_CASE("checkpoint round trip is bitwise and resume matches unbroken run") {
  const fs::path ckpt = fs::temp_directory_path() / "dg_state.ckpt";
  TrainConfig tcfg = small_tcfg();

  // Run A: 2 steps, save, then 3 more steps recording losses.
  std::vector<Scalar> unbroken;
  {
    Trainer trainer(small_gcfg(), small_dcfg(), tcfg, shared_dataset());
    for (int i = 0; i < 2; ++i) trainer.train_step();
    trainer.save_checkpoint(ckpt.string());
    for (int i = 0; i < 3; ++i) {
      const StepLosses l = trainer.train_step();
      unbroken.insert(unbroken.end(),
                      {l.adv_g, l.d_rot, l.rgb_rot, l.f_dp, l.adv_d, l.r_dp, l.r1});
    }
  }

  // Bitwise round trip.
  {
    Trainer restored = Trainer::load_checkpoint(ckpt.string(), shared_dataset());
    CHECK(restored.step() == 2);
    Trainer fresh(small_gcfg(), small_dcfg(), tcfg, shared_dataset());
    for (int i = 0; i < 2; ++i) fresh.train_step();
    CHECK(hash_params(fresh.generator().depth_params()) ==
          hash_params(restored.generator().depth_params()));
    CHECK(hash_params(fresh.generator().rgb_params()) ==
          hash_params(restored.generator().rgb_params()));
    CHECK(hash_params(fresh.discriminator().params()) ==
          hash_params(restored.discriminator().params()));

    const fs::path again = fs::temp_directory_path() / "dg_state2.ckpt";
    restored.save_checkpoint(again.string());
    std::ifstream f1(ckpt, std::ios::binary), f2(again, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b2((std::istreambuf_iterator<char>(f2)), {});
    // identical apart from nothing: the manifests and tensors must agree
    CHECK(b1 == b2);
    fs::remove(again);
  }

  // Resumed run matches the unbroken trajectory.
  {
    Trainer resumed = Trainer::load_checkpoint(ckpt.string(), shared_dataset());
    std::vector<Scalar> resumed_losses;
    for (int i = 0; i < 3; ++i) {
      const StepLosses l = resumed.train_step();
      resumed_losses.insert(
          resumed_losses.end(),
          {l.adv_g, l.d_rot, l.rgb_rot, l.f_dp, l.adv_d, l.r_dp, l.r1});
    }
    REQUIRE(resumed_losses.size() == unbroken.size());
    for (size_t i = 0; i < unbroken.size(); ++i)
      CHECK(resumed_losses[i] == unbroken[i]);
  }
  fs::remove(ckpt);
}

TEST_CASE("loading a corrupt or mismatched checkpoint refuses cleanly") {
  const fs::path bad = fs::temp_directory_path() / "dg_bad.ckpt";
  {
    std::ofstream f(bad, std::ios::binary);
    f << "not a checkpoint";
  }
  CHECK_THROWS_AS(Trainer::load_checkpoint(bad.string(), shared_dataset()),
                  std::runtime_error);
  fs::remove(bad);

  CHECK_THROWS_AS(Trainer::load_checkpoint("/nonexistent/path.ckpt", shared_dataset()),
                  std::runtime_error);
}

TEST_CASE("a non-finite loss aborts the step with diagnostics") {
  Trainer trainer(small_gcfg(), small_dcfg(), small_tcfg(), shared_dataset());
  // poison one discriminator weight so phase 4 blows up
  ParamList d = trainer.discriminator().params();
  d[0].var->val.v[0] = std::numeric_limits<Scalar>::quiet_NaN();
  const RgbdBatch real = trainer.next_batch();
  CHECK_THROWS_WITH_AS(trainer.train_step_on(real),
                       doctest::Contains("non-finite"), std::runtime_error);
}

TEST_CASE("two-view phases share latent codes across views") {
  // The contract is structural: phases 2 and 3 draw one z batch and reuse it
  // for both angles. A direct probe: depth outputs of phase 2's two views at
  // equal angles would coincide; emulate by sampling angles equal via range.
  GeneratorConfig gcfg = small_gcfg();
  TrainConfig tcfg = small_tcfg();
  tcfg.theta_min_deg = 4.999999;
  tcfg.theta_max_deg = 5.000001;  // angles effectively pinned
  Trainer trainer(gcfg, small_dcfg(), tcfg, shared_dataset());
  // With both angles pinned, the rotation loss reduces to noise-induced
  // differences near zero; if views used different codes it would be large.
  const Scalar d_rot = trainer.run_phase2_depth_rotation();
  CHECK(d_rot < 0.05);
}
