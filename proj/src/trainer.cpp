#include "depthgan/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "depthgan/checkpoint.hpp"
#include "depthgan/imageio.hpp"

namespace depthgan {

namespace {

uint64_t mix(uint64_t seed, uint64_t salt) {
  uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (salt + 0x51ULL));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CameraIntrinsics rescale_intrinsics(const CameraIntrinsics& k, int res) {
  CameraIntrinsics out = k;
  out.fx = k.fx * res / k.width;
  out.fy = k.fy * res / k.height;
  out.cx = k.cx * res / k.width;
  out.cy = k.cy * res / k.height;
  out.width = res;
  out.height = res;
  return out;
}

nlohmann::json weights_json(const LossWeights& w) {
  return {{"lambda1", w.lambda1}, {"lambda2", w.lambda2}, {"lambda3", w.lambda3},
          {"lambda4", w.lambda4}, {"r1_weight", w.r1_weight}};
}

LossWeights weights_from_json(const nlohmann::json& j) {
  LossWeights w;
  w.lambda1 = j.at("lambda1").get<Scalar>();
  w.lambda2 = j.at("lambda2").get<Scalar>();
  w.lambda3 = j.at("lambda3").get<Scalar>();
  w.lambda4 = j.at("lambda4").get<Scalar>();
  w.r1_weight = j.at("r1_weight").get<Scalar>();
  return w;
}

nlohmann::json gcfg_json(const GeneratorConfig& c) {
  return {{"m", c.m},
          {"t", c.t},
          {"mapping_layers", c.mapping_layers},
          {"resolution", c.resolution},
          {"channels", c.channels},
          {"near", c.near},
          {"far", c.far},
          {"theta_min_deg", c.theta_min_deg},
          {"theta_max_deg", c.theta_max_deg}};
}

GeneratorConfig gcfg_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.m = j.at("m").get<int>();
  c.t = j.at("t").get<int>();
  c.mapping_layers = j.at("mapping_layers").get<int>();
  c.resolution = j.at("resolution").get<int>();
  c.channels = j.at("channels").get<std::vector<int>>();
  c.near = j.at("near").get<Scalar>();
  c.far = j.at("far").get<Scalar>();
  c.theta_min_deg = j.at("theta_min_deg").get<Scalar>();
  c.theta_max_deg = j.at("theta_max_deg").get<Scalar>();
  return c;
}

nlohmann::json dcfg_json(const DiscriminatorConfig& c) {
  return {{"resolution", c.resolution},
          {"channels", c.channels},
          {"k_classes", c.k_classes},
          {"branch_channels", c.branch_channels},
          {"final_dense", c.final_dense}};
}

DiscriminatorConfig dcfg_from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  c.resolution = j.at("resolution").get<int>();
  c.channels = j.at("channels").get<std::vector<int>>();
  c.k_classes = j.at("k_classes").get<int>();
  c.branch_channels = j.at("branch_channels").get<std::vector<int>>();
  c.final_dense = j.at("final_dense").get<int>();
  return c;
}

nlohmann::json tcfg_json(const TrainConfig& c) {
  return {{"batch", c.batch},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"total_steps", c.total_steps},
          {"theta_min_deg", c.theta_min_deg},
          {"theta_max_deg", c.theta_max_deg},
          {"weights", weights_json(c.weights)},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"pivot_z_override", c.pivot_z_override}};
}

TrainConfig tcfg_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch = j.at("batch").get<int>();
  c.lr = j.at("lr").get<Scalar>();
  c.beta1 = j.at("beta1").get<Scalar>();
  c.beta2 = j.at("beta2").get<Scalar>();
  c.total_steps = j.at("total_steps").get<int64_t>();
  c.theta_min_deg = j.at("theta_min_deg").get<Scalar>();
  c.theta_max_deg = j.at("theta_max_deg").get<Scalar>();
  c.weights = weights_from_json(j.at("weights"));
  c.seed = j.at("seed").get<uint64_t>();
  c.checkpoint_every = j.at("checkpoint_every").get<int64_t>();
  c.pivot_z_override = j.at("pivot_z_override").get<Scalar>();
  return c;
}

}  // namespace

void TrainConfig::validate() const {
  check_arg(batch >= 2, "TrainConfig: rotation pairs need batch >= 2");
  check_arg(lr > 0, "TrainConfig: lr must be positive");
  check_arg(total_steps >= 1, "TrainConfig: total_steps must be positive");
  check_arg(theta_min_deg < theta_max_deg, "TrainConfig: bad angle range");
  check_arg(checkpoint_every >= 1, "TrainConfig: bad checkpoint cadence");
  weights.validate();
}

std::pair<Scalar, Scalar> sample_angles(Rng& rng, Scalar theta_min_rad,
                                        Scalar theta_max_rad) {
  check_arg(theta_min_rad < theta_max_rad, "sample_angles: bad range");
  const Scalar t1 = rng.uniform(theta_min_rad, theta_max_rad);
  const Scalar t2 = rng.uniform(theta_min_rad, theta_max_rad);
  return {t1, t2};
}

Trainer::Trainer(const GeneratorConfig& gcfg, const DiscriminatorConfig& dcfg,
                 const TrainConfig& tcfg, const DatasetManifest& data)
    : gcfg_(gcfg), dcfg_(dcfg), tcfg_(tcfg), data_(data), rng_(mix(tcfg.seed, 1)) {
  gcfg_.validate();
  dcfg_.validate();
  tcfg_.validate();
  check_arg(dcfg_.resolution == gcfg_.resolution,
            "Trainer: generator and discriminator resolutions differ");
  check_arg(std::abs(data_.near - gcfg_.near) < 1e-9 &&
                std::abs(data_.far - gcfg_.far) < 1e-9,
            "Trainer: dataset near/far does not match the generator config");
  check_arg(static_cast<int>(data_.records.size()) >= tcfg_.batch,
            "Trainer: dataset smaller than one batch");

  Rng init_rng(mix(tcfg_.seed, 2));
  generator_ = Generator::create(gcfg_, init_rng);
  discriminator_ = Discriminator::create(dcfg_, init_rng);
  gd_params_ = generator_.depth_params();
  grgb_params_ = generator_.rgb_params();
  d_params_ = discriminator_.params();
  AdamConfig acfg{tcfg_.lr, tcfg_.beta1, tcfg_.beta2, 1e-8};
  adam_gd_ = Adam(gd_params_, acfg);
  adam_grgb_ = Adam(grgb_params_, acfg);
  adam_d_ = Adam(d_params_, acfg);
}

void Trainer::emit(const std::string& name, Scalar value) const {
  if (sink_) sink_(step_, name, value);
}

Tensor Trainer::depth_to_disc(const Tensor& depth_units) const {
  Tensor out = depth_units;
  const Scalar scale = 2.0 / (gcfg_.far - gcfg_.near);
  for (auto& v : out.v) v = (v - gcfg_.near) * scale - 1.0;
  return out;
}

std::vector<Vec3> Trainer::pivots_from_depth(const Tensor& depth) const {
  const int N = depth.shape.n;
  const int64_t plane = static_cast<int64_t>(depth.shape.h) * depth.shape.w;
  std::vector<Vec3> pivots(N);
  for (int n = 0; n < N; ++n) {
    if (tcfg_.pivot_z_override > 0) {
      pivots[n] = {0, 0, tcfg_.pivot_z_override};
      continue;
    }
    Scalar sum = 0;
    for (int64_t i = 0; i < plane; ++i) sum += depth.v[n * plane + i];
    pivots[n] = {0, 0, sum / static_cast<Scalar>(plane)};
  }
  return pivots;
}

Tensor Trainer::sample_latents(int batch) {
  return Tensor::randn(Shape(batch, gcfg_.m, 1, 1), rng_);
}

void Trainer::check_finite_loss(Scalar value, const char* phase,
                                const StepLosses& losses) const {
  if (std::isfinite(value)) return;
  throw std::runtime_error(
      "training aborted: non-finite loss at step " + std::to_string(step_) +
      " in " + phase + " (adv_g=" + std::to_string(losses.adv_g) +
      " d_rot=" + std::to_string(losses.d_rot) +
      " rgb_rot=" + std::to_string(losses.rgb_rot) +
      " f_dp=" + std::to_string(losses.f_dp) +
      " adv_d=" + std::to_string(losses.adv_d) +
      " r_dp=" + std::to_string(losses.r_dp) + " r1=" + std::to_string(losses.r1) +
      ")");
}

RgbdBatch Trainer::next_batch() {
  const int n = static_cast<int>(data_.records.size());
  if (data_perm_.empty() || data_pos_ + tcfg_.batch > n) {
    if (!data_perm_.empty()) {
      ++data_epoch_;
      data_pos_ = 0;
    }
    data_perm_.resize(n);
    for (int i = 0; i < n; ++i) data_perm_[i] = i;
    Rng shuffle_rng(mix(tcfg_.seed, 1000 + data_epoch_));
    for (int i = n - 1; i > 0; --i)
      std::swap(data_perm_[i],
                data_perm_[static_cast<int>(shuffle_rng.uniform_index(i + 1))]);
  }
  std::vector<int> indices(data_perm_.begin() + data_pos_,
                           data_perm_.begin() + data_pos_ + tcfg_.batch);
  data_pos_ += tcfg_.batch;
  return load_batch(data_, indices, gcfg_.resolution);
}

Scalar Trainer::run_phase1_adversarial() {
  set_requires_grad(gd_params_, true);
  set_requires_grad(grgb_params_, true);
  set_requires_grad(d_params_, false);
  const int B = tcfg_.batch;
  const Tensor z_d = sample_latents(B);
  const Tensor z_rgb = sample_latents(B);
  std::vector<Scalar> thetas(B);
  for (auto& t : thetas)
    t = rng_.uniform(deg_to_rad(tcfg_.theta_min_deg), deg_to_rad(tcfg_.theta_max_deg));
  const NoiseBundle nd = generator_.sample_noise(rng_, B);
  const NoiseBundle nr = generator_.sample_noise(rng_, B);
  const GeneratedBatch fake = generator_.generate(z_d, z_rgb, thetas, nd, nr);

  SwitchableInput input;
  input.rgb = fake.rgb;
  input.depth = scale(add_scalar(fake.depth, -gcfg_.near), 2.0 / (gcfg_.far - gcfg_.near));
  input.depth = add_scalar(*input.depth, -1.0);
  const Var loss = adversarial_g(discriminator_.score(input));
  const GradMap grads = backward(loss);
  adam_gd_.step(grads);
  adam_grgb_.step(grads);
  return loss->val.item();
}

Scalar Trainer::run_phase2_depth_rotation() {
  set_requires_grad(gd_params_, true);
  set_requires_grad(grgb_params_, false);
  const int B = tcfg_.batch;
  const Tensor z_d = sample_latents(B);
  std::vector<Scalar> t1(B), t2(B);
  for (int i = 0; i < B; ++i)
    std::tie(t1[i], t2[i]) = sample_angles(rng_, deg_to_rad(tcfg_.theta_min_deg),
                                           deg_to_rad(tcfg_.theta_max_deg));
  const NoiseBundle n1 = generator_.sample_noise(rng_, B);
  const NoiseBundle n2 = generator_.sample_noise(rng_, B);
  const auto v1 = generator_.depth_path.forward(constant(z_d), t1, n1);
  const auto v2 = generator_.depth_path.forward(constant(z_d), t2, n2);

  const CameraIntrinsics k = rescale_intrinsics(data_.camera, gcfg_.resolution);
  const auto losses =
      rotation_losses(Var(), v1.depth, Var(), v2.depth, k, t1, t2,
                      pivots_from_depth(v1.depth->val), gcfg_.near, gcfg_.far);
  const Var loss = scale(losses.depth, tcfg_.weights.lambda1);
  const GradMap grads = backward(loss);
  adam_gd_.step(grads);
  return losses.depth->val.item();
}

std::pair<Scalar, Scalar> Trainer::run_phase3_rgb() {
  set_requires_grad(gd_params_, false);
  set_requires_grad(grgb_params_, true);
  set_requires_grad(d_params_, false);
  const int B = tcfg_.batch;
  const Tensor z_d = sample_latents(B);
  const Tensor z_rgb = sample_latents(B);
  std::vector<Scalar> t1(B), t2(B);
  for (int i = 0; i < B; ++i)
    std::tie(t1[i], t2[i]) = sample_angles(rng_, deg_to_rad(tcfg_.theta_min_deg),
                                           deg_to_rad(tcfg_.theta_max_deg));
  const NoiseBundle nd1 = generator_.sample_noise(rng_, B);
  const NoiseBundle nr1 = generator_.sample_noise(rng_, B);
  const NoiseBundle nd2 = generator_.sample_noise(rng_, B);
  const NoiseBundle nr2 = generator_.sample_noise(rng_, B);
  const GeneratedBatch v1 =
      generator_.generate(z_d, z_rgb, t1, nd1, nr1, /*detach_condition=*/true);
  const GeneratedBatch v2 =
      generator_.generate(z_d, z_rgb, t2, nd2, nr2, /*detach_condition=*/true);

  // The rotation loss sees detached depth: its gradients reach the
  // appearance renderer only.
  const Var d1 = detach(v1.depth);
  const Var d2 = detach(v2.depth);
  const CameraIntrinsics k = rescale_intrinsics(data_.camera, gcfg_.resolution);
  const auto rot = rotation_losses(v1.rgb, d1, v2.rgb, d2, k, t1, t2,
                                   pivots_from_depth(d1->val), gcfg_.near,
                                   gcfg_.far);

  // Depth prediction on the first fake view, against its own quantized depth.
  const int factor = gcfg_.resolution / discriminator_.branch_resolution();
  const Tensor target =
      quantize_depth(area_downsample(v1.depth->val, factor), dcfg_.k_classes,
                     gcfg_.near, gcfg_.far, &quantize_clamped_);
  SwitchableInput rgb_only;
  rgb_only.rgb = v1.rgb;
  const Var f_dp = depth_ce(discriminator_.predict_depth(rgb_only), target);

  const Var loss = add(scale(rot.rgb, tcfg_.weights.lambda2),
                       scale(f_dp, tcfg_.weights.lambda3));
  const GradMap grads = backward(loss);
  adam_grgb_.step(grads);
  return {rot.rgb->val.item(), f_dp->val.item()};
}

Trainer::Phase4Losses Trainer::run_phase4_discriminator(const RgbdBatch& real) {
  set_requires_grad(gd_params_, false);
  set_requires_grad(grgb_params_, false);
  set_requires_grad(d_params_, true);
  const int B = tcfg_.batch;
  check_arg(real.rgb.shape == Shape(B, 3, gcfg_.resolution, gcfg_.resolution),
            "run_phase4: real batch shape mismatch");

  // Fresh fakes, detached from the generator graph.
  const Tensor z_d = sample_latents(B);
  const Tensor z_rgb = sample_latents(B);
  std::vector<Scalar> thetas(B);
  for (auto& t : thetas)
    t = rng_.uniform(deg_to_rad(tcfg_.theta_min_deg), deg_to_rad(tcfg_.theta_max_deg));
  const NoiseBundle nd = generator_.sample_noise(rng_, B);
  const NoiseBundle nr = generator_.sample_noise(rng_, B);
  const GeneratedBatch fake = generator_.generate(z_d, z_rgb, thetas, nd, nr);

  // Real scores via input leaves shared with the R1 penalty.
  const Var real_rgb = leaf(real.rgb);
  const Var real_depth = leaf(depth_to_disc(real.depth));
  SwitchableInput real_in;
  real_in.rgb = real_rgb;
  real_in.depth = real_depth;
  const Var s_real = discriminator_.score(real_in);
  const Var r1 = r1_penalty_from_scores(sum_all(s_real), {real_rgb, real_depth},
                                        tcfg_.weights.r1_weight);

  SwitchableInput fake_in;
  fake_in.rgb = constant(fake.rgb->val);
  fake_in.depth = constant(depth_to_disc(fake.depth->val));
  const Var s_fake = discriminator_.score(fake_in);

  const Var adv = adversarial_d(s_real, s_fake);

  const int factor = gcfg_.resolution / discriminator_.branch_resolution();
  const Tensor target =
      quantize_depth(area_downsample(real.depth, factor), dcfg_.k_classes,
                     gcfg_.near, gcfg_.far, &quantize_clamped_);
  SwitchableInput real_rgb_only;
  real_rgb_only.rgb = constant(real.rgb);
  const Var r_dp = depth_ce(discriminator_.predict_depth(real_rgb_only), target);

  const Var loss = add(add(adv, scale(r_dp, tcfg_.weights.lambda4)), r1);
  const GradMap grads = backward(loss);
  adam_d_.step(grads);
  return {adv->val.item(), r_dp->val.item(), r1->val.item()};
}

StepLosses Trainer::train_step() { return train_step_on(next_batch()); }

StepLosses Trainer::train_step_on(const RgbdBatch& real) {
  StepLosses losses;
  losses.adv_g = run_phase1_adversarial();
  check_finite_loss(losses.adv_g, "phase 1 (adversarial)", losses);
  losses.d_rot = run_phase2_depth_rotation();
  check_finite_loss(losses.d_rot, "phase 2 (depth rotation)", losses);
  std::tie(losses.rgb_rot, losses.f_dp) = run_phase3_rgb();
  check_finite_loss(losses.rgb_rot + losses.f_dp, "phase 3 (appearance)", losses);
  const Phase4Losses p4 = run_phase4_discriminator(real);
  losses.adv_d = p4.adv_d;
  losses.r_dp = p4.r_dp;
  losses.r1 = p4.r1;
  check_finite_loss(losses.adv_d + losses.r_dp + losses.r1,
                    "phase 4 (discriminator)", losses);

  const LossWeights& w = tcfg_.weights;
  losses.l_gd = losses.adv_g + w.lambda1 * losses.d_rot;
  losses.l_grgb = losses.adv_g + w.lambda2 * losses.rgb_rot + w.lambda3 * losses.f_dp;
  losses.l_d = losses.adv_d + w.lambda4 * losses.r_dp;

  ++step_;
  emit("adv_g", losses.adv_g);
  emit("d_rot", losses.d_rot);
  emit("rgb_rot", losses.rgb_rot);
  emit("f_dp", losses.f_dp);
  emit("adv_d", losses.adv_d);
  emit("r_dp", losses.r_dp);
  emit("r1", losses.r1);
  emit("l_gd", losses.l_gd);
  emit("l_grgb", losses.l_grgb);
  emit("l_d", losses.l_d);
  return losses;
}

void Trainer::save_checkpoint(const std::string& path) const {
  CheckpointData data;
  const Rng::State rs = rng_.state();
  data.manifest = {
      {"format", "depthgan-train-state"},
      {"state_version", 1},
      {"step", step_},
      {"seed", tcfg_.seed},
      {"rng", {{"s", rs.s}, {"spare_bits", rs.spare_bits}, {"has_spare", rs.has_spare}}},
      {"cursor", {{"epoch", data_epoch_}, {"pos", data_pos_}}},
      {"adam_t", {{"gd", adam_gd_.t()}, {"grgb", adam_grgb_.t()}, {"d", adam_d_.t()}}},
      {"quantize_clamped", quantize_clamped_},
      {"config",
       {{"generator", gcfg_json(gcfg_)},
        {"discriminator", dcfg_json(dcfg_)},
        {"train", tcfg_json(tcfg_)}}}};

  auto add_group = [&data](const ParamList& params, const Adam& adam,
                           const std::string& opt_prefix) {
    for (size_t i = 0; i < params.size(); ++i) {
      data.tensors.emplace_back(params[i].name, params[i].var->val);
      data.tensors.emplace_back(opt_prefix + ".m." + params[i].name,
                                const_cast<Adam&>(adam).moment1(i));
      data.tensors.emplace_back(opt_prefix + ".v." + params[i].name,
                                const_cast<Adam&>(adam).moment2(i));
    }
  };
  add_group(gd_params_, adam_gd_, "opt.gd");
  add_group(grgb_params_, adam_grgb_, "opt.grgb");
  add_group(d_params_, adam_d_, "opt.d");
  save_checkpoint_file(path, data);
}

Trainer Trainer::load_checkpoint(const std::string& path,
                                 const DatasetManifest& dataset) {
  const CheckpointData data = load_checkpoint_file(path);
  const nlohmann::json& m = data.manifest;
  check_runtime(m.value("format", "") == "depthgan-train-state",
                "load_checkpoint: " + path + " is not a training state");
  check_runtime(m.value("state_version", 0) == 1,
                "load_checkpoint: unsupported state_version " +
                    std::to_string(m.value("state_version", 0)));

  const nlohmann::json& cfg = m.at("config");
  Trainer t(gcfg_from_json(cfg.at("generator")),
            dcfg_from_json(cfg.at("discriminator")),
            tcfg_from_json(cfg.at("train")), dataset);

  t.step_ = m.at("step").get<int64_t>();
  Rng::State rs;
  rs.s = m.at("rng").at("s").get<std::array<uint64_t, 4>>();
  rs.spare_bits = m.at("rng").at("spare_bits").get<uint64_t>();
  rs.has_spare = m.at("rng").at("has_spare").get<uint8_t>();
  t.rng_.set_state(rs);
  t.data_epoch_ = m.at("cursor").at("epoch").get<uint64_t>();
  t.data_pos_ = m.at("cursor").at("pos").get<int64_t>();
  t.quantize_clamped_ = m.value("quantize_clamped", 0LL);
  // Rebuild the epoch permutation the cursor points into.
  if (t.data_pos_ > 0 || t.data_epoch_ > 0) {
    const int n = static_cast<int>(dataset.records.size());
    t.data_perm_.resize(n);
    for (int i = 0; i < n; ++i) t.data_perm_[i] = i;
    Rng shuffle_rng(mix(t.tcfg_.seed, 1000 + t.data_epoch_));
    for (int i = n - 1; i > 0; --i)
      std::swap(t.data_perm_[i],
                t.data_perm_[static_cast<int>(shuffle_rng.uniform_index(i + 1))]);
  }
  t.adam_gd_.set_t(m.at("adam_t").at("gd").get<int64_t>());
  t.adam_grgb_.set_t(m.at("adam_t").at("grgb").get<int64_t>());
  t.adam_d_.set_t(m.at("adam_t").at("d").get<int64_t>());

  // Restore tensors by name; any mismatch is a refusal with the differences.
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& [name, tensor] : data.tensors) by_name[name] = &tensor;
  std::string missing;
  auto restore = [&](const std::string& name, Tensor* dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      missing += " " + name;
      return;
    }
    check_runtime(it->second->shape == dst->shape,
                  "load_checkpoint: shape mismatch for '" + name + "': " +
                      it->second->shape.str() + " vs " + dst->shape.str());
    *dst = *it->second;
    by_name.erase(it);
  };
  auto load_group = [&](ParamList& params, Adam& adam, const std::string& opt_prefix) {
    for (size_t i = 0; i < params.size(); ++i) {
      restore(params[i].name, &params[i].var->val);
      restore(opt_prefix + ".m." + params[i].name, &adam.moment1(i));
      restore(opt_prefix + ".v." + params[i].name, &adam.moment2(i));
    }
  };
  load_group(t.gd_params_, t.adam_gd_, "opt.gd");
  load_group(t.grgb_params_, t.adam_grgb_, "opt.grgb");
  load_group(t.d_params_, t.adam_d_, "opt.d");
  std::string unexpected;
  for (const auto& [name, tensor] : by_name) unexpected += " " + name;
  check_runtime(missing.empty() && unexpected.empty(),
                "load_checkpoint: state does not match this configuration;"
                " missing:[" + missing + " ] unexpected:[" + unexpected + " ]");
  return t;
}

ModelBundle load_model_bundle(const std::string& checkpoint_path) {
  const CheckpointData data = load_checkpoint_file(checkpoint_path);
  const nlohmann::json& m = data.manifest;
  check_runtime(m.value("format", "") == "depthgan-train-state",
                "load_model_bundle: " + checkpoint_path +
                    " is not a training state");
  check_runtime(m.value("state_version", 0) == 1,
                "load_model_bundle: unsupported state_version");
  const nlohmann::json& cfg = m.at("config");
  ModelBundle bundle{gcfg_from_json(cfg.at("generator")),
                     dcfg_from_json(cfg.at("discriminator")),
                     tcfg_from_json(cfg.at("train")),
                     {},
                     {},
                     m.at("step").get<int64_t>()};
  Rng init_rng(mix(bundle.tcfg.seed, 2));
  bundle.generator = Generator::create(bundle.gcfg, init_rng);
  bundle.discriminator = Discriminator::create(bundle.dcfg, init_rng);

  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& [name, tensor] : data.tensors) by_name[name] = &tensor;
  std::string missing;
  auto restore_params = [&](ParamList params) {
    for (auto& p : params) {
      auto it = by_name.find(p.name);
      if (it == by_name.end()) {
        missing += " " + p.name;
        continue;
      }
      check_runtime(it->second->shape == p.var->val.shape,
                    "load_model_bundle: shape mismatch for '" + p.name + "'");
      p.var->val = *it->second;
    }
  };
  restore_params(bundle.generator.depth_params());
  restore_params(bundle.generator.rgb_params());
  restore_params(bundle.discriminator.params());
  check_runtime(missing.empty(),
                "load_model_bundle: checkpoint is missing tensors:[" + missing +
                    " ]");
  return bundle;
}

}  // namespace depthgan
