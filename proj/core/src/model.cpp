#include "controlgan/model.hpp"

#include <algorithm>
#include <cmath>

namespace controlgan {

namespace {

constexpr real_t kLeakySlope = static_cast<real_t>(0.1);

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

// Glorot-uniform weight tensor.
Tensor init_weight(Rng& rng, const Shape& shape, int64_t fan_in, int64_t fan_out) {
  const real_t s = std::sqrt(real_t{6} / static_cast<real_t>(fan_in + fan_out));
  std::vector<real_t> v(static_cast<size_t>(shape.numel()));
  for (auto& e : v) e = rng.uniform_open(-s, s);
  return Tensor(shape, std::move(v));
}

// Creates (build) or fetches (forward) the parameters of one layer kind.
// Build and forward walk the layers in the same order; a missing name in
// the forward path fails loudly in ParamSet::at.
struct Net {
  const ModelSpec& spec;
  ParamSet* build = nullptr;  // non-null while initializing
  const ParamSet* read = nullptr;
  Rng* rng = nullptr;

  void fc(const std::string& name, int64_t in, int64_t out) {
    build->add(name + ".w", init_weight(*rng, Shape{in, out}, in, out));
    build->add(name + ".b", Tensor::zeros(Shape{out}));
  }
  Tensor fc(const std::string& name, const Tensor& x) const {
    return bias_add(matmul(x, read->at(name + ".w")), read->at(name + ".b"));
  }

  void conv(const std::string& name, int64_t co, int64_t ci, int64_t k) {
    build->add(name + ".w",
               init_weight(*rng, Shape{co, ci, k, k}, ci * k * k, co * k * k));
    build->add(name + ".b", Tensor::zeros(Shape{co}));
  }
  Tensor conv(const std::string& name, const Tensor& x, int stride) const {
    return bias_add(conv2d(x, read->at(name + ".w"), stride, Padding::same),
                    read->at(name + ".b"));
  }

  void deconv(const std::string& name, int64_t cin, int64_t cout, int64_t k) {
    build->add(name + ".w",
               init_weight(*rng, Shape{cin, cout, k, k}, cin * k * k, cout * k * k));
    build->add(name + ".b", Tensor::zeros(Shape{cout}));
  }
  Tensor deconv(const std::string& name, const Tensor& x, int stride) const {
    return bias_add(deconv2d(x, read->at(name + ".w"), stride, Padding::same),
                    read->at(name + ".b"));
  }
};

std::string block_name(const char* stage, int i, const char* half) {
  return std::string(stage) + "." + std::to_string(i) + "." + half;
}

// Residual block: x + (deconv/conv -> lrelu -> deconv/conv), then lrelu.
template <typename Layer>
Tensor res_block(const Tensor& x, Layer&& layer) {
  Tensor t = leaky_relu(layer(x, "a"), kLeakySlope);
  t = layer(t, "b");
  return leaky_relu(add(x, t), kLeakySlope);
}

// ---- generator ----

void build_generator(Net& net) {
  const ModelSpec& s = net.spec;
  if (s.kind == DataKind::vector) {
    const int w = s.vector_width();
    net.fc("fc", s.z_dim + s.label_dim, w);
    const char* stages[] = {"res1", "res2", "res3"};
    const char* mids[] = {"mid1", "mid2", nullptr};
    for (int st = 0; st < 3; ++st) {
      for (int i = 0; i < s.residual_counts[static_cast<size_t>(st)]; ++i) {
        net.fc(block_name(stages[st], i, "a"), w, w);
        net.fc(block_name(stages[st], i, "b"), w, w);
      }
      if (mids[st]) net.fc(mids[st], w, w);
    }
    net.fc("out", w, s.spatial_scale);
    return;
  }
  const int c = s.base_channels;
  const int s4 = s.spatial_scale / 4;
  net.fc("fc", s.z_dim + s.label_dim, static_cast<int64_t>(s4) * s4 * c);
  const char* stages[] = {"res1", "res2", "res3"};
  for (int st = 0; st < 3; ++st) {
    for (int i = 0; i < s.residual_counts[static_cast<size_t>(st)]; ++i) {
      net.deconv(block_name(stages[st], i, "a"), c, c, s.conv_kernel_res);
      net.deconv(block_name(stages[st], i, "b"), c, c, s.conv_kernel_res);
    }
    if (st < 2) net.deconv(st == 0 ? "up1" : "up2", c, c, s.conv_kernel_strided);
  }
  net.deconv("out", c, s.sample_channels, s.conv_kernel_strided);
}

Tensor forward_generator(const Net& net, const Tensor& z, const Tensor& labels) {
  const ModelSpec& s = net.spec;
  Tensor x = concat(z, labels);
  const char* stages[] = {"res1", "res2", "res3"};
  if (s.kind == DataKind::vector) {
    x = leaky_relu(net.fc("fc", x), kLeakySlope);
    const char* mids[] = {"mid1", "mid2", nullptr};
    for (int st = 0; st < 3; ++st) {
      for (int i = 0; i < s.residual_counts[static_cast<size_t>(st)]; ++i) {
        x = res_block(x, [&](const Tensor& t, const char* half) {
          return net.fc(block_name(stages[st], i, half), t);
        });
      }
      if (mids[st]) x = leaky_relu(net.fc(mids[st], x), kLeakySlope);
    }
    return tanh(net.fc("out", x));
  }
  const int c = s.base_channels;
  const int s4 = s.spatial_scale / 4;
  x = leaky_relu(net.fc("fc", x), kLeakySlope);
  x = reshape(x, Shape{x.shape()[0], c, s4, s4});
  for (int st = 0; st < 3; ++st) {
    for (int i = 0; i < s.residual_counts[static_cast<size_t>(st)]; ++i) {
      x = res_block(x, [&](const Tensor& t, const char* half) {
        return net.deconv(block_name(stages[st], i, half), t, 1);
      });
    }
    if (st < 2) x = leaky_relu(net.deconv(st == 0 ? "up1" : "up2", x, 2), kLeakySlope);
  }
  return tanh(net.deconv("out", x, 1));
}

// ---- discriminator / classifier ----

// Side length after the strided input conv, tracked identically by build
// and forward so the flattened width agrees.
int encoder_entry_side(const ModelSpec& s) { return (s.spatial_scale + 1) / 2; }

void build_encoder(Net& net) {
  const ModelSpec& s = net.spec;
  const int head_in = 128;
  if (s.kind == DataKind::vector) {
    const int w = s.vector_width();
    net.fc("in", s.spatial_scale, w);
    const char* stages[] = {"res1", "res2", "res3"};
    const char* mids[] = {"mid1", "mid2", nullptr};
    for (int st = 0; st < 3; ++st) {
      for (int i = 0; i < s.residual_counts[static_cast<size_t>(st)]; ++i) {
        net.fc(block_name(stages[st], i, "a"), w, w);
        net.fc(block_name(stages[st], i, "b"), w, w);
      }
      if (mids[st]) net.fc(mids[st], w, w);
    }
    net.fc("fc1", w + (s.conditional ? s.label_dim : 0), head_in);
    net.fc("head", head_in, s.head_width());
    return;
  }
  const int c = s.base_channels;
  net.conv("in", c, s.sample_channels, s.conv_kernel_strided);
  int side = encoder_entry_side(s);
  const char* stages[] = {"res1", "res2", "res3"};
  for (int st = 0; st < 3; ++st) {
    for (int i = 0; i < s.residual_counts[static_cast<size_t>(st)]; ++i) {
      net.conv(block_name(stages[st], i, "a"), c, c, s.conv_kernel_res);
      net.conv(block_name(stages[st], i, "b"), c, c, s.conv_kernel_res);
    }
    if (side >= 2) side /= 2;  // pooling
  }
  const int64_t flat = static_cast<int64_t>(c) * side * side;
  net.fc("fc1", flat + (s.conditional ? s.label_dim : 0), head_in);
  net.fc("head", head_in, s.head_width());
}

Tensor forward_encoder(const Net& net, const Tensor& x0, const Tensor& labels) {
  const ModelSpec& s = net.spec;
  Tensor x = x0;
  const char* stages[] = {"res1", "res2", "res3"};
  if (s.kind == DataKind::vector) {
    x = leaky_relu(net.fc("in", x), kLeakySlope);
    const char* mids[] = {"mid1", "mid2", nullptr};
    for (int st = 0; st < 3; ++st) {
      for (int i = 0; i < s.residual_counts[static_cast<size_t>(st)]; ++i) {
        x = res_block(x, [&](const Tensor& t, const char* half) {
          return net.fc(block_name(stages[st], i, half), t);
        });
      }
      if (mids[st]) x = leaky_relu(net.fc(mids[st], x), kLeakySlope);
    }
  } else {
    x = leaky_relu(net.conv("in", x, 2), kLeakySlope);
    int side = encoder_entry_side(s);
    for (int st = 0; st < 3; ++st) {
      for (int i = 0; i < s.residual_counts[static_cast<size_t>(st)]; ++i) {
        x = res_block(x, [&](const Tensor& t, const char* half) {
          return net.conv(block_name(stages[st], i, half), t, 1);
        });
      }
      if (side >= 2) {
        x = avg_pool(x, 2);
        side /= 2;
      }
    }
    x = reshape(x, Shape{x.shape()[0], static_cast<int64_t>(s.base_channels) * side * side});
  }
  if (s.conditional) {
    if (!labels.defined()) {
      throw shape_error("discriminator_forward: conditional spec requires a label batch");
    }
    x = concat(x, labels);
  }
  x = leaky_relu(net.fc("fc1", x), kLeakySlope);
  return sigmoid(net.fc("head", x));
}

void check_batch_input(const char* what, const Tensor& t, const Shape& want_tail) {
  if (!t.defined()) throw shape_error(std::string(what) + ": undefined input");
  Shape expect = want_tail;
  expect.d.insert(expect.d.begin(), t.defined() && t.shape().rank() > 0 ? t.shape()[0] : 0);
  if (t.shape().rank() != expect.rank() ||
      !std::equal(expect.d.begin() + 1, expect.d.end(), t.shape().d.begin() + 1)) {
    throw shape_error(std::string(what) + ": input shape " + t.shape().str() +
                      " does not match expected batch x " + want_tail.str());
  }
}

}  // namespace

ModelSpec ModelSpec::for_role(Role role, DataKind kind) {
  ModelSpec s;
  s.role = role;
  s.kind = kind;
  s.residual_counts = role == Role::generator ? std::array<int, 3>{2, 4, 2}
                                              : std::array<int, 3>{2, 4, 4};
  if (kind == DataKind::image) s.spatial_scale = 32;
  return s;
}

void ModelSpec::validate() const {
  if (base_channels < 1) throw shape_error("model spec: base_channels must be >= 1");
  if (label_dim < 1) throw shape_error("model spec: label_dim must be >= 1");
  if (role == Role::generator && z_dim < 1) {
    throw shape_error("model spec: z_dim must be >= 1");
  }
  for (int rc : residual_counts) {
    if (rc < 1) throw shape_error("model spec: residual_counts must be >= 1");
  }
  if (kind == DataKind::image) {
    if (!power_of_two(spatial_scale) || spatial_scale < 8) {
      throw shape_error("model spec: image spatial_scale must be a power of two >= 8, got " +
                        std::to_string(spatial_scale));
    }
    if (sample_channels < 1) throw shape_error("model spec: sample_channels must be >= 1");
    if (conv_kernel_strided < 1 || conv_kernel_res < 1) {
      throw shape_error("model spec: kernel sizes must be >= 1");
    }
  } else if (spatial_scale < 1) {
    throw shape_error("model spec: vector feature width must be >= 1, got " +
                      std::to_string(spatial_scale));
  }
  if (conditional && role == Role::generator) {
    throw shape_error("model spec: conditional flag applies to the discriminator only");
  }
}

Tensor& ParamSet::at(std::string_view name) {
  for (auto& [n, t] : entries) {
    if (n == name) return t;
  }
  throw std::out_of_range("param not found: " + std::string(name));
}

const Tensor& ParamSet::at(std::string_view name) const {
  for (const auto& [n, t] : entries) {
    if (n == name) return t;
  }
  throw std::out_of_range("param not found: " + std::string(name));
}

Tensor& ParamSet::add(std::string name, Tensor t) {
  t.set_trainable(true);
  entries.emplace_back(std::move(name), std::move(t));
  return entries.back().second;
}

int64_t ParamSet::total_params() const {
  int64_t n = 0;
  for (const auto& [name, t] : entries) n += t.numel();
  return n;
}

void ParamSet::zero_grads() {
  for (auto& [name, t] : entries) t.zero_grad();
}

std::vector<Tensor> ParamSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries.size());
  for (const auto& [name, t] : entries) out.push_back(t);
  return out;
}

uint64_t ParamSet::value_checksum() const {
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, t] : entries) {
    mix(name.data(), name.size());
    mix(t.values().data(), t.values().size() * sizeof(real_t));
  }
  return h;
}

ParamSet build_model(const ModelSpec& spec, uint32_t seed) {
  spec.validate();
  ParamSet ps;
  ps.init_seed = seed;
  Rng rng(seed);
  Net net{spec, &ps, nullptr, &rng};
  if (spec.role == Role::generator) {
    build_generator(net);
  } else {
    build_encoder(net);
  }
  return ps;
}

int64_t expected_param_count(const ModelSpec& s) {
  s.validate();
  auto fc = [](int64_t in, int64_t out) { return in * out + out; };
  auto convk = [](int64_t co, int64_t ci, int64_t k) { return co * ci * k * k + co; };
  const int64_t res_total = s.residual_counts[0] + s.residual_counts[1] + s.residual_counts[2];

  if (s.role == Role::generator) {
    if (s.kind == DataKind::vector) {
      const int64_t w = s.vector_width();
      return fc(s.z_dim + s.label_dim, w) + 2 * res_total * fc(w, w) + 2 * fc(w, w) +
             fc(w, s.spatial_scale);
    }
    const int64_t c = s.base_channels;
    const int64_t s4 = s.spatial_scale / 4;
    return fc(s.z_dim + s.label_dim, s4 * s4 * c) +
           2 * res_total * convk(c, c, s.conv_kernel_res) +
           2 * convk(c, c, s.conv_kernel_strided) +
           convk(s.sample_channels, c, s.conv_kernel_strided);
  }

  const int64_t extra = s.conditional ? s.label_dim : 0;
  if (s.kind == DataKind::vector) {
    const int64_t w = s.vector_width();
    return fc(s.spatial_scale, w) + 2 * res_total * fc(w, w) + 2 * fc(w, w) +
           fc(w + extra, 128) + fc(128, s.head_width());
  }
  const int64_t c = s.base_channels;
  int side = encoder_entry_side(s);
  for (int st = 0; st < 3; ++st) {
    if (side >= 2) side /= 2;
  }
  return convk(c, s.sample_channels, s.conv_kernel_strided) +
         2 * res_total * convk(c, c, s.conv_kernel_res) + fc(c * side * side + extra, 128) +
         fc(128, s.head_width());
}

Tensor generator_forward(const ModelSpec& spec, const ParamSet& params,
                         const Tensor& z, const Tensor& labels) {
  spec.validate();
  check_batch_input("generator_forward(z)", z, Shape{spec.z_dim});
  check_batch_input("generator_forward(labels)", labels, Shape{spec.label_dim});
  if (z.shape()[0] != labels.shape()[0]) {
    throw shape_error("generator_forward: z batch " + z.shape().str() +
                      " vs labels batch " + labels.shape().str());
  }
  Net net{spec, nullptr, &params, nullptr};
  return forward_generator(net, z, labels);
}

Tensor discriminator_forward(const ModelSpec& spec, const ParamSet& params,
                             const Tensor& x, const Tensor& labels) {
  spec.validate();
  if (spec.kind == DataKind::vector) {
    check_batch_input("discriminator_forward", x, Shape{spec.spatial_scale});
  } else {
    check_batch_input("discriminator_forward", x,
                      Shape{spec.sample_channels, spec.spatial_scale, spec.spatial_scale});
  }
  Net net{spec, nullptr, &params, nullptr};
  return forward_encoder(net, x, labels);
}

Tensor classifier_forward(const ModelSpec& spec, const ParamSet& params, const Tensor& x) {
  return discriminator_forward(spec, params, x);
}

}  // namespace controlgan
