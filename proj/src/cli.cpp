#include "depthgan/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "depthgan/config.hpp"
#include "depthgan/eval_outputs.hpp"
#include "depthgan/imageio.hpp"
#include "depthgan/metrics.hpp"

namespace fs = std::filesystem;

namespace depthgan {

namespace {

struct CommonOpts {
  std::string preset = "desk64";
  std::string config_file;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts* opts) {
  cmd->add_option("--preset", opts->preset,
                  "configuration preset (desk64, paper128, paper256)");
  cmd->add_option("--config", opts->config_file, "key = value config file");
  cmd->add_option("--set", opts->sets, "override a config key (key=value)");
}

RunConfig build_config(const CommonOpts& opts) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const std::string& s : opts.sets) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return resolve_config(opts.preset, opts.config_file, overrides);
}

std::string default_run_dir(uint64_t seed) {
  const char* root = std::getenv("DEPTHGAN_RUN_ROOT");
  const fs::path base = root && *root ? fs::path(root) : fs::path("runs");
  return (base / ("train-seed" + std::to_string(seed))).string();
}

std::vector<Scalar> parse_angle_list_deg(const std::string& csv) {
  std::vector<Scalar> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(deg_to_rad(std::stod(item)));
  check_arg(!out.empty(), "empty angle list");
  return out;
}

Tensor latent_from_seed(int m, uint64_t seed) {
  Rng rng(seed);
  return Tensor::randn(Shape(1, m, 1, 1), rng);
}

int run_make_toy_data(const CommonOpts& common, const std::string& out_dir,
                      int scenes, int angles, int64_t seed) {
  RunConfig cfg = build_config(common);
  if (scenes > 0) cfg.toy_scenes = scenes;
  if (angles > 0) cfg.toy_angles_per_scene = angles;
  const uint64_t use_seed = seed >= 0 ? static_cast<uint64_t>(seed) : cfg.train.seed;
  const DatasetManifest manifest = generate_dataset(
      cfg.toy_scenes, cfg.toy_angles_per_scene, use_seed, out_dir, cfg.camera(),
      cfg.generator.near, cfg.generator.far, deg_to_rad(cfg.generator.theta_min_deg),
      deg_to_rad(cfg.generator.theta_max_deg));
  std::printf("wrote %zu records to %s\n", manifest.records.size(), out_dir.c_str());
  return 0;
}

int run_train(const CommonOpts& common, const std::string& data_dir,
              std::string run_dir, const std::string& resume, bool force,
              int64_t steps_override) {
  RunConfig cfg = build_config(common);
  cfg.data_dir = data_dir;
  if (steps_override > 0) cfg.train.total_steps = steps_override;
  if (run_dir.empty()) run_dir = default_run_dir(cfg.train.seed);

  const DatasetManifest manifest = load_manifest(data_dir);
  const fs::path dir(run_dir);
  const fs::path cfg_path = dir / "config.resolved.cfg";
  if (resume.empty() && fs::exists(cfg_path) && !force)
    throw ConfigError("run directory " + run_dir +
                      " already holds a run (use --force to overwrite)");
  fs::create_directories(dir / "checkpoints");

  std::unique_ptr<Trainer> trainer;
  if (!resume.empty()) {
    trainer = std::make_unique<Trainer>(Trainer::load_checkpoint(resume, manifest));
  } else {
    trainer = std::make_unique<Trainer>(cfg.generator, cfg.discriminator,
                                        cfg.train, manifest);
    std::ofstream echo(cfg_path);
    check_runtime(echo.good(), "cannot write " + cfg_path.string());
    echo << echo_config(cfg);
  }

  std::ofstream metrics(dir / "metrics.tsv", std::ios::app);
  check_runtime(metrics.good(), "cannot open metrics log in " + run_dir);
  trainer->set_metric_sink([&metrics](int64_t step, const std::string& name,
                                      Scalar value) {
    char line[160];
    std::snprintf(line, sizeof(line), "%lld\t%s\t%.17g\n",
                  static_cast<long long>(step), name.c_str(), value);
    metrics << line;
  });

  const int64_t total = trainer->config().total_steps;
  auto write_checkpoint = [&](int64_t step) {
    char name[64];
    std::snprintf(name, sizeof(name), "step_%06lld.ckpt",
                  static_cast<long long>(step));
    const fs::path ckpt = dir / "checkpoints" / name;
    trainer->save_checkpoint(ckpt.string());
    std::ofstream latest(dir / "checkpoints" / "latest");
    latest << name << "\n";
  };

  while (trainer->step() < total) {
    const StepLosses l = trainer->train_step();
    metrics.flush();
    if (trainer->step() % 25 == 0 || trainer->step() == total)
      std::printf("step %lld/%lld  l_d=%.4f l_gd=%.4f l_grgb=%.4f\n",
                  static_cast<long long>(trainer->step()),
                  static_cast<long long>(total), l.l_d, l.l_gd, l.l_grgb);
    if (trainer->step() % trainer->config().checkpoint_every == 0)
      write_checkpoint(trainer->step());
  }
  if (trainer->step() % trainer->config().checkpoint_every != 0)
    write_checkpoint(trainer->step());
  return 0;
}

int run_sample(const std::string& ckpt, const std::string& out, uint64_t seed,
               Scalar theta_deg) {
  const ModelBundle bundle = load_model_bundle(ckpt);
  LatentPair pair;
  pair.z_d = latent_from_seed(bundle.gcfg.m, seed);
  pair.z_rgb = latent_from_seed(bundle.gcfg.m, seed ^ 0x9e3779b97f4a7c15ULL);
  pair.theta = deg_to_rad(theta_deg);
  const RgbdImage img = bundle.generator.generate_image(pair, seed + 1);
  write_rgb_tensor_png(out, img.rgb);
  const std::string depth_out =
      out.size() > 4 ? out.substr(0, out.size() - 4) + "_depth.png" : out + ".depth.png";
  write_depth_tensor_png(depth_out, img.depth.values, img.depth.near, img.depth.far);
  std::printf("wrote %s and %s\n", out.c_str(), depth_out.c_str());
  return 0;
}

int run_sweep(const std::string& ckpt, const std::string& angles_csv,
              const std::string& out, uint64_t seed) {
  const ModelBundle bundle = load_model_bundle(ckpt);
  const std::vector<Scalar> angles = parse_angle_list_deg(angles_csv);
  const Tensor z_d = latent_from_seed(bundle.gcfg.m, seed);
  const Tensor z_rgb = latent_from_seed(bundle.gcfg.m, seed ^ 0x9e3779b97f4a7c15ULL);
  const auto warnings =
      rotation_sweep(bundle.generator, z_d, z_rgb, angles, seed + 1, out);
  for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("wrote %s (%zu columns)\n", out.c_str(), angles.size());
  return 0;
}

int run_interpolate(const std::string& ckpt, const std::string& which, int steps,
                    const std::string& out, uint64_t seed, Scalar theta_deg,
                    const std::string& space) {
  check_arg(which == "depth" || which == "appearance",
            "--which must be 'depth' or 'appearance'");
  check_arg(space == "z" || space == "w", "--space must be 'z' or 'w'");
  const ModelBundle bundle = load_model_bundle(ckpt);
  InterpolationSpec spec;
  spec.z_a = latent_from_seed(bundle.gcfg.m, seed);
  spec.z_b = latent_from_seed(bundle.gcfg.m, seed + 1);
  spec.z_fixed = latent_from_seed(bundle.gcfg.m, seed + 2);
  spec.interpolate_depth = which == "depth";
  spec.w_space = space == "w";
  spec.steps = steps;
  spec.theta = deg_to_rad(theta_deg);
  spec.noise_seed = seed + 3;
  interpolate_strip(bundle.generator, spec, out);
  std::printf("wrote %s (%d steps)\n", out.c_str(), steps);
  return 0;
}

int run_metrics(const CommonOpts& common, const std::string& ckpt,
                const std::string& data_dir, const std::string& out) {
  RunConfig cfg = build_config(common);
  const ModelBundle bundle = load_model_bundle(ckpt);
  const DatasetManifest manifest = load_manifest(data_dir);
  const CameraIntrinsics k = intrinsics_from_focal(
      cfg.focal_mm, cfg.sensor_mm, bundle.gcfg.resolution, bundle.gcfg.resolution);
  const Scalar near = bundle.gcfg.near, far = bundle.gcfg.far;

  nlohmann::json report;
  auto record = [&](const std::string& name, Scalar value, int n) {
    report[name] = {{"value", value},
                    {"n", n},
                    {"seed", cfg.metric_seed},
                    {"checkpoint", ckpt}};
  };

  {
    Rng rng(cfg.metric_seed);
    GeneratorPairSource source(bundle.generator,
                               deg_to_rad(bundle.gcfg.theta_min_deg),
                               deg_to_rad(bundle.gcfg.theta_max_deg));
    const RotationMetrics rm =
        rotation_metrics(source, k, near, far, cfg.metric_pairs, rng);
    record("rp", rm.rp, rm.n_pairs);
    record("rc", rm.rc, rm.n_pairs);
  }

  {
    Rng rng(cfg.metric_seed + 1);
    const int n_eval = std::min<int>(cfg.fid_samples,
                                     static_cast<int>(manifest.records.size()));
    std::vector<int> heldout(n_eval);
    for (int i = 0; i < n_eval; ++i)
      heldout[i] = static_cast<int>(manifest.records.size()) - n_eval + i;
    const RgbdBatch real = load_batch(manifest, heldout, bundle.gcfg.resolution);
    const RgbdBatch fake = generate_fake_batch(bundle.generator, n_eval, rng);
    const DepthPredictionMetrics dp =
        depth_prediction_metrics(bundle.discriminator, real, fake, near, far);
    record("dp_real", dp.dp_real, dp.n_real);
    record("dp_fake", dp.dp_fake, dp.n_fake);

    const auto embedder = make_embedder(cfg.embedder, cfg.metric_seed + 2);
    auto embed_batch = [&](const RgbdBatch& batch, bool depth_as_rgb) {
      std::vector<std::vector<Scalar>> embeddings;
      const int n = batch.rgb.shape.n;
      const int R = batch.rgb.shape.h;
      for (int i = 0; i < n; ++i) {
        Tensor img(Shape(1, 3, R, R));
        if (depth_as_rgb) {
          for (int y = 0; y < R; ++y)
            for (int x = 0; x < R; ++x) {
              const Scalar dn =
                  2.0 * (batch.depth.at(i, 0, y, x) - near) / (far - near) - 1.0;
              for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = dn;
            }
        } else {
          std::copy_n(batch.rgb.data() + static_cast<int64_t>(i) * 3 * R * R,
                      3LL * R * R, img.data());
        }
        embeddings.push_back(embedder->embed(img));
      }
      return embedding_stats(embeddings);
    };
    record("fid_rgb",
           frechet_distance(embed_batch(real, false), embed_batch(fake, false)),
           n_eval);
    record("fid_depth",
           frechet_distance(embed_batch(real, true), embed_batch(fake, true)),
           n_eval);
  }

  std::ofstream f(out);
  check_runtime(f.good(), "cannot write " + out);
  f << report.dump(2) << "\n";
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int run_export_pointcloud(const std::string& ckpt, const std::string& out,
                          uint64_t seed, Scalar theta_deg, Scalar focal_mm,
                          Scalar sensor_mm) {
  const ModelBundle bundle = load_model_bundle(ckpt);
  LatentPair pair;
  pair.z_d = latent_from_seed(bundle.gcfg.m, seed);
  pair.z_rgb = latent_from_seed(bundle.gcfg.m, seed ^ 0x9e3779b97f4a7c15ULL);
  pair.theta = deg_to_rad(theta_deg);
  const RgbdImage img = bundle.generator.generate_image(pair, seed + 1);
  const CameraIntrinsics k = intrinsics_from_focal(
      focal_mm, sensor_mm, bundle.gcfg.resolution, bundle.gcfg.resolution);
  export_pointcloud(img, k, out);
  std::printf("wrote %s (%d vertices)\n", out.c_str(),
              bundle.gcfg.resolution * bundle.gcfg.resolution);
  return 0;
}

int run_predict_depth(const std::string& ckpt, const std::string& rgb_path,
                      const std::string& out) {
  const ModelBundle bundle = load_model_bundle(ckpt);
  const ImageU8 rgb8 = read_png_rgb8(rgb_path);
  Tensor rgb(Shape(1, 3, rgb8.h, rgb8.w));
  for (int y = 0; y < rgb8.h; ++y)
    for (int x = 0; x < rgb8.w; ++x)
      for (int c = 0; c < 3; ++c)
        rgb.at(0, c, y, x) =
            rgb8.data[(static_cast<size_t>(y) * rgb8.w + x) * 3 + c] / 255.0 * 2.0 -
            1.0;
  const int R = bundle.dcfg.resolution;
  rgb = bilinear_resize(center_crop_square(rgb), R, R);

  SwitchableInput in;
  in.rgb = constant(rgb);
  const Var logits = bundle.discriminator.predict_depth(in);
  const int br = bundle.discriminator.branch_resolution();
  const int kc = bundle.dcfg.k_classes;
  Tensor depth(Shape(1, 1, br, br));
  const Scalar near = bundle.gcfg.near, far = bundle.gcfg.far;
  for (int y = 0; y < br; ++y)
    for (int x = 0; x < br; ++x) {
      int best = 0;
      for (int c = 1; c < kc; ++c)
        if (logits->val.at(0, c, y, x) > logits->val.at(0, best, y, x)) best = c;
      depth.at(0, 0, y, x) = near + (best + 0.5) / kc * (far - near);
    }
  write_depth_tensor_png(out, depth, near, far);
  nlohmann::json sidecar = {{"near", near}, {"far", far}, {"resolution", br},
                            {"k_classes", kc}, {"checkpoint", ckpt}};
  std::ofstream f(out + ".json");
  f << sidecar.dump(2) << "\n";
  std::printf("wrote %s (+.json sidecar)\n", out.c_str());
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"depthgan: rotation-consistent RGBD scene synthesis"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* make_data = app.add_subcommand("make-toy-data",
                                       "render a procedural RGBD dataset");
  add_common(make_data, &common);
  std::string out_dir;
  int md_scenes = 0, md_angles = 0;
  int64_t md_seed = -1;
  make_data->add_option("--out", out_dir, "output directory")->required();
  make_data->add_option("--scenes", md_scenes, "number of scenes");
  make_data->add_option("--angles", md_angles, "views per scene");
  make_data->add_option("--seed", md_seed, "dataset seed");

  auto* train = app.add_subcommand("train", "run the four-phase training loop");
  add_common(train, &common);
  std::string data_dir, run_dir, resume;
  bool force = false;
  int64_t steps_override = 0;
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--run-dir", run_dir,
                    "run directory (default $DEPTHGAN_RUN_ROOT/train-seed<N>)");
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--steps", steps_override, "override train.steps");
  train->add_flag("--force", force, "allow reusing an existing run directory");

  std::string ckpt, out, which = "depth", space = "z";
  std::string angles_csv = "-15,-7.5,0,7.5,15";
  std::string rgb_path;
  uint64_t seed = 7;
  double theta_deg = 0.0;
  int steps = 5;

  auto* sample = app.add_subcommand("sample", "generate one RGBD sample");
  sample->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  sample->add_option("--out", out, "output PNG")->required();
  sample->add_option("--seed", seed, "latent seed");
  sample->add_option("--theta", theta_deg, "viewing angle (degrees)");

  auto* sweep = app.add_subcommand("sweep", "rotation sweep grid");
  sweep->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  sweep->add_option("--out", out, "output PNG")->required();
  sweep->add_option("--angles", angles_csv, "comma-separated degrees");
  sweep->add_option("--seed", seed, "latent seed");

  auto* interp = app.add_subcommand("interpolate", "latent interpolation strip");
  interp->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  interp->add_option("--out", out, "output PNG")->required();
  interp->add_option("--which", which, "depth | appearance");
  interp->add_option("--space", space, "interpolation space: z (default) | w");
  interp->add_option("--steps", steps, "interpolation steps");
  interp->add_option("--seed", seed, "latent seed");
  interp->add_option("--theta", theta_deg, "viewing angle (degrees)");

  auto* metrics = app.add_subcommand("metrics", "evaluation metric report");
  add_common(metrics, &common);
  metrics->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  metrics->add_option("--data", data_dir, "dataset directory")->required();
  metrics->add_option("--out", out, "output JSON")->required();

  auto* pcl = app.add_subcommand("export-pointcloud",
                                 "unproject one generated sample to PLY");
  pcl->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  pcl->add_option("--out", out, "output PLY")->required();
  pcl->add_option("--seed", seed, "latent seed");
  pcl->add_option("--theta", theta_deg, "viewing angle (degrees)");
  double pc_focal = 26.0, pc_sensor = 36.0;
  pcl->add_option("--focal-mm", pc_focal, "focal length (mm)");
  pcl->add_option("--sensor-mm", pc_sensor, "sensor width (mm)");

  auto* predict = app.add_subcommand("predict-depth",
                                     "run the depth-prediction branch on an RGB file");
  predict->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  predict->add_option("--rgb", rgb_path, "input RGB PNG")->required();
  predict->add_option("--out", out, "output 16-bit depth PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (make_data->parsed())
      return run_make_toy_data(common, out_dir, md_scenes, md_angles, md_seed);
    if (train->parsed())
      return run_train(common, data_dir, run_dir, resume, force, steps_override);
    if (sample->parsed()) return run_sample(ckpt, out, seed, theta_deg);
    if (sweep->parsed()) return run_sweep(ckpt, angles_csv, out, seed);
    if (interp->parsed())
      return run_interpolate(ckpt, which, steps, out, seed, theta_deg, space);
    if (metrics->parsed()) return run_metrics(common, ckpt, data_dir, out);
    if (pcl->parsed())
      return run_export_pointcloud(ckpt, out, seed, theta_deg, pc_focal, pc_sensor);
    if (predict->parsed()) return run_predict_depth(ckpt, rgb_path, out);
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace depthgan
