#pragma once

#include <optional>
#include <string>

#include "controlgan/rng.hpp"
#include "controlgan/tensor.hpp"

namespace controlgan {

// Synthetic task with analytically known label effects: each sample is
// base_center + sum_k l_k * direction_k + Gaussian noise, normalized into
// [-1, 1]. Because every label contributes a fixed unit-vector displacement,
// feeding a label value v at generation time predicts a displacement of
// v * direction_k, which makes interpolation/extrapolation measurable.
struct SyntheticSpec {
  int dim = 2;
  int label_dim = 2;
  // label_dim rows of `dim` entries; each row must have unit norm.
  std::vector<std::vector<real_t>> label_directions;
  std::vector<std::vector<real_t>> base_centers;  // one or more `dim`-vectors
  real_t noise_sigma = static_cast<real_t>(0.15);
  int samples_per_combo = 2000;  // per point of {0,1}^label_dim
  uint64_t seed = 0;

  static SyntheticSpec axes(int dim, int label_dim);  // axis-aligned directions

  void validate() const;
};

// Retained by the synthetic loader for oracle use: the normalization factor
// applied to the raw geometry.
struct SyntheticDescriptor {
  SyntheticSpec spec;
  real_t scale = 1;  // normalized = raw * scale

  // Ground-truth direction of label k (unit vector) and its displacement
  // magnitude in normalized coordinates.
  const std::vector<real_t>& direction(int k) const;
  real_t displacement() const { return scale; }
  std::vector<real_t> scaled_center(size_t i = 0) const;

  std::string to_text() const;
  static SyntheticDescriptor from_text(const std::string& text);
};

struct LabeledDataset {
  Tensor samples;                   // (N, dim) or (N, C, H, W), values in [-1, 1]
  std::vector<LabelVector> labels;  // binary {0,1} per entry
  std::string source;               // human-readable origin
  std::optional<SyntheticDescriptor> synthetic;

  int64_t size() const { return samples.defined() ? samples.shape()[0] : 0; }
  int label_dim() const { return labels.empty() ? 0 : static_cast<int>(labels[0].size()); }

  // Label batch tensor (rows, label_dim) for the given sample indices.
  Tensor label_batch(const std::vector<int64_t>& idx) const;
  Tensor sample_batch(const std::vector<int64_t>& idx) const;
};

LabeledDataset make_synthetic(const SyntheticSpec& spec);

// i.i.d. Unif(-1, 1) noise, (batch, z_dim); endpoints are never produced.
Tensor sample_noise(Rng& rng, int64_t batch, int64_t z_dim);

// Deterministic shuffled batch sequence. Every epoch is a fresh permutation
// derived from (seed, epoch); the partial final batch of an epoch is
// dropped so all batches have identical size.
class BatchStream {
 public:
  BatchStream(const LabeledDataset& data, int64_t batch_size, uint64_t seed);

  struct Batch {
    Tensor samples;
    Tensor labels;
  };

  Batch next();

  int64_t batches_per_epoch() const { return per_epoch_; }
  // Positions the stream as if `iterations` batches had been consumed.
  void seek(int64_t iterations);

 private:
  void reshuffle();

  const LabeledDataset* data_;
  int64_t batch_size_;
  uint64_t seed_;
  int64_t per_epoch_;
  int64_t epoch_ = 0;
  int64_t cursor_ = 0;  // batch index within the epoch
  std::vector<int64_t> order_;
};

}  // namespace controlgan
