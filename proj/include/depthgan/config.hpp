#pragma once

#include <string>
#include <utility>
#include <vector>

#include "depthgan/discriminator.hpp"
#include "depthgan/generator.hpp"
#include "depthgan/trainer.hpp"

namespace depthgan {

// Raised for malformed keys/values; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Everything a run needs, resolved from preset -> config file -> CLI
// overrides (later wins). Serializes to flat `key = value` text.
struct RunConfig {
  std::string preset = "desk64";

  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainConfig train;

  Scalar focal_mm = 26.0;
  Scalar sensor_mm = 36.0;

  std::string data_dir;

  int metric_pairs = 256;
  uint64_t metric_seed = 7;
  std::string embedder = "randconv";
  int fid_samples = 128;

  int toy_scenes = 1000;
  int toy_angles_per_scene = 2;

  void validate() const;
  CameraIntrinsics camera() const;
};

// Presets: "desk64" (CPU-scale), "paper128" and "paper256" (the published
// hyperparameters; 256 defaults to the bedroom rotation weight).
RunConfig preset_config(const std::string& name);

// Applies one `key = value` assignment; unknown keys raise ConfigError
// naming the key.
void apply_config_value(RunConfig& cfg, const std::string& key,
                        const std::string& value);

// preset, then optional file, then overrides.
RunConfig resolve_config(const std::string& preset, const std::string& file,
                         const std::vector<std::pair<std::string, std::string>>&
                             overrides);

// Flat echo of every key; parsing it back reproduces the config.
std::string echo_config(const RunConfig& cfg);

// Parses `key = value` lines ('#' comments); applies them in order.
void apply_config_text(RunConfig& cfg, const std::string& text,
                       const std::string& source_name);

}  // namespace depthgan
