#pragma once

#include <array>
#include <string_view>
#include <utility>
#include <vector>

#include "controlgan/autodiff.hpp"
#include "controlgan/rng.hpp"

namespace controlgan {

enum class Role : uint8_t { generator, discriminator, classifier };
enum class DataKind : uint8_t { vector, image };

// Architecture descriptor. The image-mode topology is: generator = FC to a
// (scale/4)^2 plane stack followed by residual deconv blocks and three
// strided/plain deconvolutions; discriminator and classifier mirror it with
// strided conv, residual conv blocks, average pooling and two FC heads
// (width 128, then 1 or label_dim). In vector mode the conv stacks collapse
// to fully-connected residual blocks of the same counts.
struct ModelSpec {
  Role role = Role::generator;
  DataKind kind = DataKind::vector;
  int base_channels = 16;
  // Image mode: output side length in pixels (power of two >= 8).
  // Vector mode: sample feature width.
  int spatial_scale = 2;
  int sample_channels = 1;
  std::array<int, 3> residual_counts{2, 4, 2};
  int z_dim = 32;
  int label_dim = 2;
  int conv_kernel_strided = 5;
  int conv_kernel_res = 3;
  // Joins the label vector to the penultimate FC features (cGAN-style
  // conditional discriminator).
  bool conditional = false;

  static ModelSpec for_role(Role role, DataKind kind);

  void validate() const;  // throws shape_error naming the violated invariant

  // Hidden width of the collapsed fully-connected stacks in vector mode.
  int vector_width() const { return 2 * base_channels; }
  int head_width() const { return role == Role::discriminator ? 1 : label_dim; }
};

// Named, ordered parameter collection. Creation order is deterministic, so
// two ParamSets built from the same spec and seed are bit-identical.
struct ParamSet {
  std::vector<std::pair<std::string, Tensor>> entries;
  uint32_t init_seed = 0;

  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  Tensor& add(std::string name, Tensor t);

  size_t size() const { return entries.size(); }
  int64_t total_params() const;
  void zero_grads();
  std::vector<Tensor> tensors() const;

  // FNV-1a over names and raw value bytes; used by the frozen-classifier
  // and step-isolation checks.
  uint64_t value_checksum() const;
};

ParamSet build_model(const ModelSpec& spec, uint32_t seed);

// Closed-form parameter count for a spec; kept in agreement with
// build_model by test.
int64_t expected_param_count(const ModelSpec& spec);

// Sample batch from noise and labels; output elements lie in (-1, 1).
Tensor generator_forward(const ModelSpec& spec, const ParamSet& params,
                         const Tensor& z, const Tensor& labels);

// Realness score per batch element, strictly inside (0, 1). A conditional
// spec requires the label batch.
Tensor discriminator_forward(const ModelSpec& spec, const ParamSet& params,
                             const Tensor& x, const Tensor& labels = {});

// Per-label probabilities, shape (batch, label_dim).
Tensor classifier_forward(const ModelSpec& spec, const ParamSet& params,
                          const Tensor& x);

}  // namespace controlgan
