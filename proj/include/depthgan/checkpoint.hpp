#pragma once

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "depthgan/tensor.hpp"

namespace depthgan {

// Single-file checkpoint: a JSON manifest (config echo, step, seed, RNG and
// cursor state) followed by named raw-double tensors. Doubles are stored in
// host byte order (little-endian on every supported platform), so a saved
// state reloads bitwise.
struct CheckpointData {
  nlohmann::json manifest;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
};

void save_checkpoint_file(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint_file(const std::string& path);

}  // namespace depthgan
