#include "depthgan/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace depthgan {

namespace {

constexpr char kMagic[4] = {'D', 'G', 'C', 'K'};
constexpr uint32_t kFormatVersion = 1;

template <class T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

const Tensor& CheckpointData::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
}

void save_checkpoint_file(const std::string& path, const CheckpointData& data) {
  std::ofstream f(path, std::ios::binary);
  check_runtime(f.good(), "save_checkpoint: cannot open " + path);
  f.write(kMagic, 4);
  write_pod(f, kFormatVersion);
  const std::string manifest = data.manifest.dump();
  write_pod(f, static_cast<uint64_t>(manifest.size()));
  f.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  write_pod(f, static_cast<uint64_t>(data.tensors.size()));
  for (const auto& [name, t] : data.tensors) {
    write_pod(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(f, static_cast<int64_t>(t.shape.n));
    write_pod(f, static_cast<int64_t>(t.shape.c));
    write_pod(f, static_cast<int64_t>(t.shape.h));
    write_pod(f, static_cast<int64_t>(t.shape.w));
    f.write(reinterpret_cast<const char*>(t.v.data()),
            static_cast<std::streamsize>(t.v.size() * sizeof(Scalar)));
  }
  check_runtime(f.good(), "save_checkpoint: write failure for " + path);
}

CheckpointData load_checkpoint_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  check_runtime(f.good(), "load_checkpoint: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  check_runtime(f.good() && std::memcmp(magic, kMagic, 4) == 0,
                "load_checkpoint: " + path + " is not a checkpoint file");
  const uint32_t version = read_pod<uint32_t>(f);
  check_runtime(version == kFormatVersion,
                "load_checkpoint: format version " + std::to_string(version) +
                    " unsupported (expected " + std::to_string(kFormatVersion) +
                    ")");
  const uint64_t manifest_len = read_pod<uint64_t>(f);
  std::string manifest(manifest_len, '\0');
  f.read(manifest.data(), static_cast<std::streamsize>(manifest_len));
  CheckpointData data;
  try {
    data.manifest = nlohmann::json::parse(manifest);
  } catch (const std::exception& e) {
    throw std::runtime_error("load_checkpoint: manifest parse error: " +
                             std::string(e.what()));
  }
  const uint64_t n_tensors = read_pod<uint64_t>(f);
  for (uint64_t i = 0; i < n_tensors; ++i) {
    const uint32_t name_len = read_pod<uint32_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    Shape s;
    s.n = static_cast<int>(read_pod<int64_t>(f));
    s.c = static_cast<int>(read_pod<int64_t>(f));
    s.h = static_cast<int>(read_pod<int64_t>(f));
    s.w = static_cast<int>(read_pod<int64_t>(f));
    Tensor t(s);
    f.read(reinterpret_cast<char*>(t.v.data()),
           static_cast<std::streamsize>(t.v.size() * sizeof(Scalar)));
    check_runtime(f.good(), "load_checkpoint: truncated tensor data in " + path);
    data.tensors.emplace_back(std::move(name), std::move(t));
  }
  return data;
}

}  // namespace depthgan
