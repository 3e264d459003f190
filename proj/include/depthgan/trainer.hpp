#pragma once

#include <functional>
#include <string>

#include "depthgan/discriminator.hpp"
#include "depthgan/generator.hpp"
#include "depthgan/losses.hpp"
#include "depthgan/optimizer.hpp"
#include "depthgan/toy_scenes.hpp"

namespace depthgan {

struct TrainConfig {
  int batch = 8;
  Scalar lr = 1.5e-3;
  Scalar beta1 = 0.0, beta2 = 0.99;
  int64_t total_steps = 500;
  Scalar theta_min_deg = -15.0, theta_max_deg = 15.0;
  LossWeights weights;
  uint64_t seed = 1;
  int64_t checkpoint_every = 250;
  // 0 keeps the per-sample mean-depth pivot; otherwise a fixed pivot z.
  Scalar pivot_z_override = 0.0;

  void validate() const;
};

// Two independent uniform draws from the configured angle range (radians).
std::pair<Scalar, Scalar> sample_angles(Rng& rng, Scalar theta_min_rad,
                                        Scalar theta_max_rad);

struct StepLosses {
  Scalar adv_g = 0, d_rot = 0, rgb_rot = 0, f_dp = 0;
  Scalar adv_d = 0, r_dp = 0, r1 = 0;
  Scalar l_gd = 0, l_grgb = 0, l_d = 0;  // Eq. totals, logged per step
};

// Four-phase alternating optimisation:
//   1. adversarial update of both generator paths
//   2. depth rotation consistency, depth path only
//   3. rgb rotation consistency + fake depth prediction, appearance path only
//   4. discriminator: adversarial + real depth prediction + R1
// Each phase computes its own gradients and steps exactly one optimizer
// group, so the other groups stay bitwise untouched.
class Trainer {
 public:
  using MetricSink =
      std::function<void(int64_t step, const std::string& name, Scalar value)>;

  Trainer(const GeneratorConfig& gcfg, const DiscriminatorConfig& dcfg,
          const TrainConfig& tcfg, const DatasetManifest& data);

  // One full step on the next dataset batch.
  StepLosses train_step();
  // One full step on a caller-provided real batch (advances phase RNG only).
  StepLosses train_step_on(const RgbdBatch& real);

  // Individual phases, exposed so isolation tests can hash between them.
  Scalar run_phase1_adversarial();
  Scalar run_phase2_depth_rotation();
  std::pair<Scalar, Scalar> run_phase3_rgb();  // (rgb_rot, f_dp)
  struct Phase4Losses {
    Scalar adv_d, r_dp, r1;
  };
  Phase4Losses run_phase4_discriminator(const RgbdBatch& real);

  RgbdBatch next_batch();

  int64_t step() const { return step_; }
  const Generator& generator() const { return generator_; }
  Generator& generator() { return generator_; }
  const Discriminator& discriminator() const { return discriminator_; }
  Discriminator& discriminator() { return discriminator_; }
  const TrainConfig& config() const { return tcfg_; }
  Rng& rng() { return rng_; }

  void set_metric_sink(MetricSink sink) { sink_ = std::move(sink); }

  void save_checkpoint(const std::string& path) const;
  // Rebuilds a trainer from a checkpoint; the dataset manifest must describe
  // the same data layout the run was started with.
  static Trainer load_checkpoint(const std::string& path,
                                 const DatasetManifest& data);

  // Normalization of depth (camera units) into the discriminator's [-1,1]
  // input range.
  Tensor depth_to_disc(const Tensor& depth_units) const;

  const GeneratorConfig& generator_config() const { return gcfg_; }
  const DiscriminatorConfig& discriminator_config() const { return dcfg_; }

 private:
  void emit(const std::string& name, Scalar value) const;
  std::vector<Vec3> pivots_from_depth(const Tensor& depth) const;
  Tensor sample_latents(int batch);
  void check_finite_loss(Scalar value, const char* phase,
                         const StepLosses& losses) const;

  GeneratorConfig gcfg_;
  DiscriminatorConfig dcfg_;
  TrainConfig tcfg_;
  DatasetManifest data_;

  Generator generator_;
  Discriminator discriminator_;
  ParamList gd_params_, grgb_params_, d_params_;
  Adam adam_gd_, adam_grgb_, adam_d_;

  Rng rng_;
  int64_t step_ = 0;
  uint64_t data_epoch_ = 0;
  int64_t data_pos_ = 0;
  std::vector<int> data_perm_;
  int64_t quantize_clamped_ = 0;

  MetricSink sink_;
};

// Parameter-only view of a checkpoint for evaluation commands that do not
// need a dataset or optimizer state.
struct ModelBundle {
  GeneratorConfig gcfg;
  DiscriminatorConfig dcfg;
  TrainConfig tcfg;
  Generator generator;
  Discriminator discriminator;
  int64_t step = 0;
};

ModelBundle load_model_bundle(const std::string& checkpoint_path);

}  // namespace depthgan
