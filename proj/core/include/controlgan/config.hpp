#pragma once

#include <string>

#include "controlgan/dataset.hpp"
#include "controlgan/model.hpp"
#include "controlgan/trainer.hpp"

namespace controlgan {

struct ModelConfig {
  DataKind kind = DataKind::vector;
  int base_channels = 16;
  int spatial_scale = 32;  // image mode only; vector mode uses data.dim
  int sample_channels = 1;
  std::array<int, 3> gen_res{2, 4, 2};
  std::array<int, 3> enc_res{2, 4, 4};
  int z_dim = 32;
  int conv_kernel_strided = 5;
  int conv_kernel_res = 3;
};

struct DataConfig {
  enum class Kind : uint8_t { synthetic, image_dir };
  Kind kind = Kind::synthetic;
  int dim = 2;
  int label_dim = 2;
  real_t noise_sigma = static_cast<real_t>(0.15);
  int samples_per_combo = 2000;
  uint64_t seed = 99;
  std::string directions;  // "c,c,..;c,c,.." rows; empty = axis-aligned
  std::string centers;     // same encoding; empty = origin
  std::string image_dir;
  std::string label_file;
};

// Whole-run configuration: a flat key=value file with '#' comments.
// Unknown keys are rejected, not warned about; the canonical serialization
// (to_text) writes every key in a fixed order so config snapshots embedded
// in checkpoints are byte-stable.
struct FullConfig {
  TrainConfig train;
  ModelConfig model;
  DataConfig data;

  static FullConfig parse_file(const std::string& path);
  static FullConfig parse_text(const std::string& text, const std::string& origin = "<text>");
  std::string to_text() const;

  ModelSpec spec_for(Role role) const;
  LabeledDataset load_dataset() const;
  SyntheticSpec synthetic_spec() const;

  void validate() const;
};

}  // namespace controlgan
