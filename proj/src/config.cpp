#include "depthgan/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace depthgan {

namespace {

std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': bad integer list element '" +
                        item + "'");
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string join_int_list(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

Scalar parse_scalar(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const Scalar v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad number '" + s + "'");
  }
}

int64_t parse_int(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad integer '" + s + "'");
  }
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::string format_scalar(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  generator.validate();
  discriminator.validate();
  train.validate();
  if (focal_mm <= 0 || sensor_mm <= 0)
    throw ConfigError("camera.focal_mm and camera.sensor_mm must be positive");
  if (metric_pairs < 1) throw ConfigError("metrics.pairs must be positive");
  if (fid_samples < 2) throw ConfigError("metrics.fid_samples must be at least 2");
  if (embedder != "randconv" && embedder != "downsample")
    throw ConfigError("metrics.embedder must be 'randconv' or 'downsample'");
  if (toy_scenes < 1 || toy_angles_per_scene < 1)
    throw ConfigError("toy.scenes and toy.angles_per_scene must be positive");
  if (discriminator.resolution != generator.resolution)
    throw ConfigError("generator and discriminator resolutions must match");
}

CameraIntrinsics RunConfig::camera() const {
  return intrinsics_from_focal(focal_mm, sensor_mm, generator.resolution,
                               generator.resolution);
}

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  cfg.preset = name;
  if (name == "desk64") {
    cfg.generator.m = 128;
    cfg.generator.t = 4;
    cfg.generator.mapping_layers = 2;
    cfg.generator.resolution = 64;
    cfg.generator.channels = {32, 32, 24, 16, 8};
    cfg.discriminator.resolution = 64;
    cfg.discriminator.channels = {8, 16, 24, 32, 32};
    cfg.discriminator.branch_channels = {16, 12, 8};
    cfg.discriminator.final_dense = 64;
    cfg.train.batch = 8;
    cfg.train.total_steps = 500;
    cfg.train.weights = LossWeights{50.0, 0.3, 1e-3, 0.8, 0.3};
  } else if (name == "paper128") {
    cfg.generator.m = 512;
    cfg.generator.t = 4;
    cfg.generator.mapping_layers = 8;
    cfg.generator.resolution = 128;
    cfg.generator.channels = {512, 512, 512, 512, 256, 128};
    cfg.discriminator.resolution = 128;
    cfg.discriminator.channels = {128, 256, 512, 512, 512, 512};
    cfg.discriminator.branch_channels = {128, 96, 64};
    cfg.discriminator.final_dense = 512;
    cfg.train.batch = 64;
    cfg.train.total_steps = 1562500;  // paper-scale schedule, not run here
    cfg.train.weights = LossWeights{50.0, 0.3, 1e-3, 0.8, 0.3};
  } else if (name == "paper256") {
    cfg.generator.m = 512;
    cfg.generator.t = 4;
    cfg.generator.mapping_layers = 8;
    cfg.generator.resolution = 256;
    cfg.generator.channels = {512, 512, 512, 512, 256, 128, 64};
    cfg.discriminator.resolution = 256;
    cfg.discriminator.channels = {64, 128, 256, 512, 512, 512, 512};
    cfg.discriminator.branch_channels = {128, 96, 64};
    cfg.discriminator.final_dense = 512;
    cfg.train.batch = 64;
    cfg.train.total_steps = 1562500;
    // bedroom rotation weight; the kitchen runs use loss.lambda2 = 0.4
    cfg.train.weights = LossWeights{50.0, 0.5, 1e-3, 0.8, 0.5};
  } else {
    throw ConfigError("unknown preset '" + name +
                      "' (expected desk64, paper128 or paper256)");
  }
  cfg.train.lr = 1.5e-3;
  return cfg;
}

void apply_config_value(RunConfig& cfg, const std::string& key,
                        const std::string& value) {
  using Handler = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Handler> handlers = {
      {"preset",
       [](RunConfig& c, const std::string& v) {
         RunConfig fresh = preset_config(v);
         // keep non-preset fields already set
         fresh.data_dir = c.data_dir;
         c = fresh;
       }},
      {"camera.focal_mm",
       [](RunConfig& c, const std::string& v) { c.focal_mm = parse_scalar(v, "camera.focal_mm"); }},
      {"camera.sensor_mm",
       [](RunConfig& c, const std::string& v) { c.sensor_mm = parse_scalar(v, "camera.sensor_mm"); }},
      {"data.dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; }},
      {"data.near",
       [](RunConfig& c, const std::string& v) { c.generator.near = parse_scalar(v, "data.near"); }},
      {"data.far",
       [](RunConfig& c, const std::string& v) { c.generator.far = parse_scalar(v, "data.far"); }},
      {"generator.m",
       [](RunConfig& c, const std::string& v) { c.generator.m = static_cast<int>(parse_int(v, "generator.m")); }},
      {"generator.t",
       [](RunConfig& c, const std::string& v) { c.generator.t = static_cast<int>(parse_int(v, "generator.t")); }},
      {"generator.mapping_layers",
       [](RunConfig& c, const std::string& v) {
         c.generator.mapping_layers = static_cast<int>(parse_int(v, "generator.mapping_layers"));
       }},
      {"generator.resolution",
       [](RunConfig& c, const std::string& v) {
         c.generator.resolution = static_cast<int>(parse_int(v, "generator.resolution"));
       }},
      {"generator.channels",
       [](RunConfig& c, const std::string& v) { c.generator.channels = parse_int_list(v, "generator.channels"); }},
      {"generator.theta_min_deg",
       [](RunConfig& c, const std::string& v) {
         c.generator.theta_min_deg = parse_scalar(v, "generator.theta_min_deg");
         c.train.theta_min_deg = c.generator.theta_min_deg;
       }},
      {"generator.theta_max_deg",
       [](RunConfig& c, const std::string& v) {
         c.generator.theta_max_deg = parse_scalar(v, "generator.theta_max_deg");
         c.train.theta_max_deg = c.generator.theta_max_deg;
       }},
      {"disc.resolution",
       [](RunConfig& c, const std::string& v) {
         c.discriminator.resolution = static_cast<int>(parse_int(v, "disc.resolution"));
       }},
      {"disc.channels",
       [](RunConfig& c, const std::string& v) { c.discriminator.channels = parse_int_list(v, "disc.channels"); }},
      {"disc.k_classes",
       [](RunConfig& c, const std::string& v) {
         c.discriminator.k_classes = static_cast<int>(parse_int(v, "disc.k_classes"));
       }},
      {"disc.branch_channels",
       [](RunConfig& c, const std::string& v) {
         c.discriminator.branch_channels = parse_int_list(v, "disc.branch_channels");
       }},
      {"disc.final_dense",
       [](RunConfig& c, const std::string& v) {
         c.discriminator.final_dense = static_cast<int>(parse_int(v, "disc.final_dense"));
       }},
      {"train.batch",
       [](RunConfig& c, const std::string& v) { c.train.batch = static_cast<int>(parse_int(v, "train.batch")); }},
      {"train.lr",
       [](RunConfig& c, const std::string& v) { c.train.lr = parse_scalar(v, "train.lr"); }},
      {"train.beta1",
       [](RunConfig& c, const std::string& v) { c.train.beta1 = parse_scalar(v, "train.beta1"); }},
      {"train.beta2",
       [](RunConfig& c, const std::string& v) { c.train.beta2 = parse_scalar(v, "train.beta2"); }},
      {"train.steps",
       [](RunConfig& c, const std::string& v) { c.train.total_steps = parse_int(v, "train.steps"); }},
      {"train.seed",
       [](RunConfig& c, const std::string& v) {
         c.train.seed = static_cast<uint64_t>(parse_int(v, "train.seed"));
       }},
      {"train.checkpoint_every",
       [](RunConfig& c, const std::string& v) {
         c.train.checkpoint_every = parse_int(v, "train.checkpoint_every");
       }},
      {"train.pivot_z",
       [](RunConfig& c, const std::string& v) { c.train.pivot_z_override = parse_scalar(v, "train.pivot_z"); }},
      {"loss.lambda1",
       [](RunConfig& c, const std::string& v) { c.train.weights.lambda1 = parse_scalar(v, "loss.lambda1"); }},
      {"loss.lambda2",
       [](RunConfig& c, const std::string& v) { c.train.weights.lambda2 = parse_scalar(v, "loss.lambda2"); }},
      {"loss.lambda3",
       [](RunConfig& c, const std::string& v) { c.train.weights.lambda3 = parse_scalar(v, "loss.lambda3"); }},
      {"loss.lambda4",
       [](RunConfig& c, const std::string& v) { c.train.weights.lambda4 = parse_scalar(v, "loss.lambda4"); }},
      {"loss.r1_weight",
       [](RunConfig& c, const std::string& v) { c.train.weights.r1_weight = parse_scalar(v, "loss.r1_weight"); }},
      {"metrics.pairs",
       [](RunConfig& c, const std::string& v) { c.metric_pairs = static_cast<int>(parse_int(v, "metrics.pairs")); }},
      {"metrics.seed",
       [](RunConfig& c, const std::string& v) {
         c.metric_seed = static_cast<uint64_t>(parse_int(v, "metrics.seed"));
       }},
      {"metrics.embedder",
       [](RunConfig& c, const std::string& v) { c.embedder = v; }},
      {"metrics.fid_samples",
       [](RunConfig& c, const std::string& v) {
         c.fid_samples = static_cast<int>(parse_int(v, "metrics.fid_samples"));
       }},
      {"toy.scenes",
       [](RunConfig& c, const std::string& v) { c.toy_scenes = static_cast<int>(parse_int(v, "toy.scenes")); }},
      {"toy.angles_per_scene",
       [](RunConfig& c, const std::string& v) {
         c.toy_angles_per_scene = static_cast<int>(parse_int(v, "toy.angles_per_scene"));
       }},
  };
  auto it = handlers.find(key);
  if (it == handlers.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, value);
}

void apply_config_text(RunConfig& cfg, const std::string& text,
                       const std::string& source_name) {
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source_name + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

RunConfig resolve_config(const std::string& preset, const std::string& file,
                         const std::vector<std::pair<std::string, std::string>>&
                             overrides) {
  RunConfig cfg = preset_config(preset);
  if (!file.empty()) {
    std::ifstream f(file);
    if (!f.good()) throw ConfigError("cannot open config file '" + file + "'");
    std::stringstream buffer;
    buffer << f.rdbuf();
    apply_config_text(cfg, buffer.str(), file);
  }
  for (const auto& [key, value] : overrides) apply_config_value(cfg, key, value);
  cfg.validate();
  return cfg;
}

std::string echo_config(const RunConfig& cfg) {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) {
    out += k + " = " + v + "\n";
  };
  kv("preset", cfg.preset);
  kv("camera.focal_mm", format_scalar(cfg.focal_mm));
  kv("camera.sensor_mm", format_scalar(cfg.sensor_mm));
  kv("data.dir", cfg.data_dir);
  kv("data.near", format_scalar(cfg.generator.near));
  kv("data.far", format_scalar(cfg.generator.far));
  kv("generator.m", std::to_string(cfg.generator.m));
  kv("generator.t", std::to_string(cfg.generator.t));
  kv("generator.mapping_layers", std::to_string(cfg.generator.mapping_layers));
  kv("generator.resolution", std::to_string(cfg.generator.resolution));
  kv("generator.channels", join_int_list(cfg.generator.channels));
  kv("generator.theta_min_deg", format_scalar(cfg.generator.theta_min_deg));
  kv("generator.theta_max_deg", format_scalar(cfg.generator.theta_max_deg));
  kv("disc.resolution", std::to_string(cfg.discriminator.resolution));
  kv("disc.channels", join_int_list(cfg.discriminator.channels));
  kv("disc.k_classes", std::to_string(cfg.discriminator.k_classes));
  kv("disc.branch_channels", join_int_list(cfg.discriminator.branch_channels));
  kv("disc.final_dense", std::to_string(cfg.discriminator.final_dense));
  kv("train.batch", std::to_string(cfg.train.batch));
  kv("train.lr", format_scalar(cfg.train.lr));
  kv("train.beta1", format_scalar(cfg.train.beta1));
  kv("train.beta2", format_scalar(cfg.train.beta2));
  kv("train.steps", std::to_string(cfg.train.total_steps));
  kv("train.seed", std::to_string(cfg.train.seed));
  kv("train.checkpoint_every", std::to_string(cfg.train.checkpoint_every));
  kv("train.pivot_z", format_scalar(cfg.train.pivot_z_override));
  kv("loss.lambda1", format_scalar(cfg.train.weights.lambda1));
  kv("loss.lambda2", format_scalar(cfg.train.weights.lambda2));
  kv("loss.lambda3", format_scalar(cfg.train.weights.lambda3));
  kv("loss.lambda4", format_scalar(cfg.train.weights.lambda4));
  kv("loss.r1_weight", format_scalar(cfg.train.weights.r1_weight));
  kv("metrics.pairs", std::to_string(cfg.metric_pairs));
  kv("metrics.seed", std::to_string(cfg.metric_seed));
  kv("metrics.embedder", cfg.embedder);
  kv("metrics.fid_samples", std::to_string(cfg.fid_samples));
  kv("toy.scenes", std::to_string(cfg.toy_scenes));
  kv("toy.angles_per_scene", std::to_string(cfg.toy_angles_per_scene));
  return out;
}

}  // namespace depthgan
