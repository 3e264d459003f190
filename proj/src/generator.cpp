#include "depthgan/generator.hpp"

#include <cmath>
#include <functional>

namespace depthgan {

namespace {

bool power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

int level_resolution(int level) { return 4 << level; }

// Builds the shared synthesis stack (const input + modulated convs + noise).
void build_synthesis(const GeneratorConfig& cfg, Rng& rng, Var* const_input,
                     std::vector<ModulatedConv>* convs,
                     std::vector<NoiseInject>* noises) {
  *const_input = leaf(Tensor::randn(Shape(1, cfg.channels[0], 4, 4), rng));
  convs->push_back(
      ModulatedConv::create(rng, cfg.m, cfg.channels[0], cfg.channels[0], 3, true));
  noises->push_back(NoiseInject::create());
  for (int level = 1; level < cfg.levels(); ++level) {
    const int ci = cfg.channels[level - 1];
    const int co = cfg.channels[level];
    convs->push_back(ModulatedConv::create(rng, cfg.m, ci, co, 3, true));
    noises->push_back(NoiseInject::create());
    convs->push_back(ModulatedConv::create(rng, cfg.m, co, co, 3, true));
    noises->push_back(NoiseInject::create());
  }
}

NoiseBundle make_noise(const GeneratorConfig& cfg, int batch,
                       const std::function<Scalar()>& draw) {
  NoiseBundle bundle;
  bundle.layers.reserve(cfg.n_convs());
  int conv = 0;
  for (int level = 0; level < cfg.levels(); ++level) {
    const int res = level_resolution(level);
    const int per_level = level == 0 ? 1 : 2;
    for (int i = 0; i < per_level; ++i, ++conv) {
      Tensor t(Shape(batch, 1, res, res));
      for (auto& v : t.v) v = draw();
      bundle.layers.push_back(std::move(t));
    }
  }
  return bundle;
}

}  // namespace

void GeneratorConfig::validate() const {
  check_arg(m >= 2, "GeneratorConfig: m must be at least 2");
  check_arg(t >= 1, "GeneratorConfig: t must be at least 1");
  check_arg(mapping_layers >= 1, "GeneratorConfig: mapping_layers must be >= 1");
  check_arg(power_of_two(resolution) && resolution >= 32,
            "GeneratorConfig: resolution must be a power of two >= 32");
  const int levels = static_cast<int>(channels.size());
  check_arg(levels >= 1 && level_resolution(levels - 1) == resolution,
            "GeneratorConfig: channel schedule must cover 4^2 up to the output "
            "resolution");
  for (const int c : channels)
    check_arg(c >= 1, "GeneratorConfig: channel counts must be positive");
  check_arg(near > 0 && far > near, "GeneratorConfig: need 0 < near < far");
  check_arg(theta_min_deg < theta_max_deg, "GeneratorConfig: bad angle range");
}

Tensor angle_features(const std::vector<Scalar>& thetas, int t) {
  check_arg(t >= 1, "angle_features: t must be at least 1");
  check_arg(!thetas.empty(), "angle_features: empty angle batch");
  Tensor out(Shape(static_cast<int>(thetas.size()), 2 * t, 1, 1));
  for (size_t n = 0; n < thetas.size(); ++n)
    for (int f = 1; f <= t; ++f) {
      out.at(static_cast<int>(n), 2 * (f - 1), 0, 0) = std::sin(f * thetas[n]);
      out.at(static_cast<int>(n), 2 * (f - 1) + 1, 0, 0) = std::cos(f * thetas[n]);
    }
  return out;
}

Var inject_angle(const Var& w, const Var& gamma) {
  check_arg(w->val.shape == gamma->val.shape,
            "inject_angle: w and gamma must share shape, got " +
                w->val.shape.str() + " vs " + gamma->val.shape.str());
  return mul(w, gamma);
}

DepthPath DepthPath::create(const GeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  DepthPath path;
  path.cfg = cfg;
  path.mapping = MappingNetwork::create(rng, cfg.m, cfg.mapping_layers, 0.01);
  path.angle_fc1 = EqualizedConv::create(rng, 2 * cfg.t, cfg.m, 1, 1, 0);
  path.angle_fc2 = EqualizedConv::create(rng, cfg.m, cfg.m, 1, 1, 0);
  build_synthesis(cfg, rng, &path.const_input, &path.convs, &path.noises);
  path.head = ModulatedConv::create(rng, cfg.m, cfg.channels.back(), 1, 1, false);
  return path;
}

Var DepthPath::encode_angle(const std::vector<Scalar>& thetas) const {
  const Var feats = constant(angle_features(thetas, cfg.t));
  const Var h = leaky_relu(angle_fc1.forward(feats), kLeakySlope, leaky_gain());
  return angle_fc2.forward(h);
}

DepthPathOutput DepthPath::forward(
    const Var& z_d, const std::vector<Scalar>& thetas, const NoiseBundle& noise,
    const std::unordered_map<int, Tensor>* overrides) const {
  const int N = z_d->val.shape.n;
  check_arg(z_d->val.shape == Shape(N, cfg.m, 1, 1),
            "DepthPath: z_d must be [N,m,1,1], got " + z_d->val.shape.str());
  return run_synthesis(mapping.forward(z_d), thetas, noise, overrides);
}

DepthPathOutput DepthPath::forward_from_w(const Var& w,
                                          const std::vector<Scalar>& thetas,
                                          const NoiseBundle& noise) const {
  return run_synthesis(w, thetas, noise, nullptr);
}

DepthPathOutput DepthPath::run_synthesis(
    const Var& w_in, const std::vector<Scalar>& thetas, const NoiseBundle& noise,
    const std::unordered_map<int, Tensor>* overrides) const {
  const int N = w_in->val.shape.n;
  check_arg(w_in->val.shape == Shape(N, cfg.m, 1, 1),
            "DepthPath: w must be [N,m,1,1], got " + w_in->val.shape.str());
  check_arg(static_cast<int>(thetas.size()) == N,
            "DepthPath: need one angle per sample");
  check_arg(static_cast<int>(noise.layers.size()) == cfg.n_convs(),
            "DepthPath: noise bundle has wrong layer count");

  DepthPathOutput out;
  out.w = w_in;
  out.w_prime = inject_angle(out.w, encode_angle(thetas));

  Var x = broadcast_to(const_input, Shape(N, cfg.channels[0], 4, 4));
  int conv = 0;
  for (int level = 0; level < cfg.levels(); ++level) {
    const int per_level = level == 0 ? 1 : 2;
    if (level > 0) x = upsample2x(x);
    for (int i = 0; i < per_level; ++i, ++conv) {
      if (overrides && overrides->count(conv))
        x = constant(overrides->at(conv));
      out.conv_inputs.push_back(x);
      const Var& style = conv < 2 ? out.w_prime : out.w;
      x = convs[conv].forward(x, style);
      x = noises[conv].forward(x, noise.layers[conv]);
      x = leaky_relu(x, kLeakySlope, leaky_gain());
    }
    out.psi.push_back(x);
  }
  const Var raw = head.forward(x, out.w);
  out.depth = add_scalar(scale(sigmoid(raw), cfg.far - cfg.near), cfg.near);
  return out;
}

void DepthPath::collect(const std::string& prefix, ParamList& out) const {
  mapping.collect(prefix + ".mapping", out);
  angle_fc1.collect(prefix + ".angle.fc1", out);
  angle_fc2.collect(prefix + ".angle.fc2", out);
  out.push_back({prefix + ".const", const_input});
  for (size_t i = 0; i < convs.size(); ++i) {
    convs[i].collect(prefix + ".conv" + std::to_string(i), out);
    noises[i].collect(prefix + ".noise" + std::to_string(i), out);
  }
  head.collect(prefix + ".head", out);
}

FusionBlock FusionBlock::create(Rng& rng, int c_psi, int c_phi) {
  FusionBlock f;
  f.conv1 = EqualizedConv::create(rng, c_psi + c_phi, c_phi, 3, 1, 1);
  f.conv2 = EqualizedConv::create(rng, c_phi, c_phi, 1, 1, 0);
  return f;
}

Var FusionBlock::forward(const Var& psi, const Var& phi) const {
  const Shape& ps = psi->val.shape;
  const Shape& fs = phi->val.shape;
  check_arg(ps.n == fs.n && ps.h == fs.h && ps.w == fs.w,
            "FusionBlock: spatial dimensions differ, " + ps.str() + " vs " +
                fs.str());
  const Var cat = concat_c({psi, phi});
  return conv2.forward(leaky_relu(conv1.forward(cat), kLeakySlope, leaky_gain()));
}

void FusionBlock::collect(const std::string& prefix, ParamList& out) const {
  conv1.collect(prefix + ".conv1", out);
  conv2.collect(prefix + ".conv2", out);
}

RgbPath RgbPath::create(const GeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  RgbPath path;
  path.cfg = cfg;
  path.mapping = MappingNetwork::create(rng, cfg.m, cfg.mapping_layers, 0.01);
  build_synthesis(cfg, rng, &path.const_input, &path.convs, &path.noises);
  for (int level = 0; level < cfg.levels(); ++level)
    path.fusions.push_back(
        FusionBlock::create(rng, cfg.channels[level], cfg.channels[level]));
  path.head = ModulatedConv::create(rng, cfg.m, cfg.channels.back(), 3, 1, false);
  return path;
}

RgbPathOutput RgbPath::forward(const Var& z_rgb, const std::vector<Var>& psi,
                               const NoiseBundle& noise) const {
  const int N = z_rgb->val.shape.n;
  check_arg(z_rgb->val.shape == Shape(N, cfg.m, 1, 1),
            "RgbPath: z_rgb must be [N,m,1,1]");
  return run_synthesis(mapping.forward(z_rgb), psi, noise);
}

RgbPathOutput RgbPath::forward_from_w(const Var& w, const std::vector<Var>& psi,
                                      const NoiseBundle& noise) const {
  return run_synthesis(w, psi, noise);
}

RgbPathOutput RgbPath::run_synthesis(const Var& w_in, const std::vector<Var>& psi,
                                     const NoiseBundle& noise) const {
  const int N = w_in->val.shape.n;
  check_arg(w_in->val.shape == Shape(N, cfg.m, 1, 1),
            "RgbPath: w must be [N,m,1,1]");
  check_arg(static_cast<int>(psi.size()) == cfg.levels(),
            "RgbPath: condition pyramid has " + std::to_string(psi.size()) +
                " levels, expected " + std::to_string(cfg.levels()));
  for (int level = 0; level < cfg.levels(); ++level) {
    const Shape& s = psi[level]->val.shape;
    const int res = level_resolution(level);
    check_arg(s.h == res && s.w == res && s.n == N,
              "RgbPath: condition level " + std::to_string(level) +
                  " has shape " + s.str());
  }
  check_arg(static_cast<int>(noise.layers.size()) == cfg.n_convs(),
            "RgbPath: noise bundle has wrong layer count");

  RgbPathOutput out;
  out.w = w_in;
  Var x = broadcast_to(const_input, Shape(N, cfg.channels[0], 4, 4));
  int conv = 0;
  for (int level = 0; level < cfg.levels(); ++level) {
    const int per_level = level == 0 ? 1 : 2;
    if (level > 0) x = upsample2x(x);
    for (int i = 0; i < per_level; ++i, ++conv) {
      x = convs[conv].forward(x, out.w);
      x = noises[conv].forward(x, noise.layers[conv]);
      x = leaky_relu(x, kLeakySlope, leaky_gain());
    }
    x = fusions[level].forward(psi[level], x);
  }
  out.rgb = tanh(head.forward(x, out.w));
  return out;
}

void RgbPath::collect(const std::string& prefix, ParamList& out) const {
  mapping.collect(prefix + ".mapping", out);
  out.push_back({prefix + ".const", const_input});
  for (size_t i = 0; i < convs.size(); ++i) {
    convs[i].collect(prefix + ".conv" + std::to_string(i), out);
    noises[i].collect(prefix + ".noise" + std::to_string(i), out);
  }
  for (size_t i = 0; i < fusions.size(); ++i)
    fusions[i].collect(prefix + ".fuse" + std::to_string(i), out);
  head.collect(prefix + ".head", out);
}

Generator Generator::create(const GeneratorConfig& cfg, Rng& rng) {
  Generator g;
  g.cfg = cfg;
  g.depth_path = DepthPath::create(cfg, rng);
  g.rgb_path = RgbPath::create(cfg, rng);
  return g;
}

NoiseBundle Generator::sample_noise(Rng& rng, int batch) const {
  return make_noise(cfg, batch, [&rng] { return rng.normal(); });
}

NoiseBundle Generator::zero_noise(int batch) const {
  return make_noise(cfg, batch, [] { return 0.0; });
}

GeneratedBatch Generator::generate(const Tensor& z_d, const Tensor& z_rgb,
                                   const std::vector<Scalar>& thetas,
                                   const NoiseBundle& noise_d,
                                   const NoiseBundle& noise_rgb,
                                   bool detach_condition) const {
  DepthPathOutput d = depth_path.forward(constant(z_d), thetas, noise_d);
  GeneratedBatch out;
  out.depth = d.depth;
  out.psi = d.psi;
  out.w_d = d.w;
  std::vector<Var> condition = d.psi;
  if (detach_condition)
    for (auto& p : condition) p = detach(p);
  RgbPathOutput r = rgb_path.forward(constant(z_rgb), condition, noise_rgb);
  out.rgb = r.rgb;
  out.w_rgb = r.w;
  return out;
}

RgbdImage Generator::generate_image_from_w(const Tensor& w_d, const Tensor& w_rgb,
                                            Scalar theta,
                                            uint64_t noise_seed) const {
  check_arg(w_d.shape == Shape(1, cfg.m, 1, 1) && w_rgb.shape == Shape(1, cfg.m, 1, 1),
            "generate_image_from_w: styles must be [1,m,1,1]");
  Rng rng(noise_seed);
  const NoiseBundle nd = sample_noise(rng, 1);
  const NoiseBundle nr = sample_noise(rng, 1);
  const DepthPathOutput d = depth_path.forward_from_w(constant(w_d), {theta}, nd);
  const RgbPathOutput r = rgb_path.forward_from_w(constant(w_rgb), d.psi, nr);
  RgbdImage img;
  img.rgb = r.rgb->val;
  img.depth.values = d.depth->val;
  img.depth.near = cfg.near;
  img.depth.far = cfg.far;
  return img;
}

RgbdImage Generator::generate_image(const LatentPair& pair,
                                    uint64_t noise_seed) const {
  check_arg(pair.z_d.shape == Shape(1, cfg.m, 1, 1) &&
                pair.z_rgb.shape == Shape(1, cfg.m, 1, 1),
            "generate_image: latent codes must be [1,m,1,1]");
  Rng rng(noise_seed);
  const NoiseBundle nd = sample_noise(rng, 1);
  const NoiseBundle nr = sample_noise(rng, 1);
  const GeneratedBatch batch =
      generate(pair.z_d, pair.z_rgb, {pair.theta}, nd, nr);
  RgbdImage img;
  img.rgb = batch.rgb->val;
  img.depth.values = batch.depth->val;
  img.depth.near = cfg.near;
  img.depth.far = cfg.far;
  return img;
}

ParamList Generator::depth_params() const {
  ParamList out;
  depth_path.collect("g_d", out);
  return out;
}

ParamList Generator::rgb_params() const {
  ParamList out;
  rgb_path.collect("g_rgb", out);
  return out;
}

}  // namespace depthgan
