#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "controlgan/dataset.hpp"
#include "controlgan/image_io.hpp"
#include "controlgan/model.hpp"

namespace controlgan {

// Evaluation-only judge, trained on a held-out slice of the real data with
// its own seed so the generator is never graded by the classifier it was
// trained against.
struct OracleResult {
  ParamSet params;
  real_t holdout_accuracy = 0;
  real_t holdout_loss = 0;
};

OracleResult train_oracle(const LabeledDataset& data, const ModelSpec& spec_c,
                          uint64_t seed, int epochs = 4, int64_t batch_size = 64);

// Per-label accuracy (threshold 0.5) and mean classification loss of a
// classifier on a dataset.
std::pair<real_t, real_t> classifier_score(const ModelSpec& spec_c, const ParamSet& params,
                                           const LabeledDataset& data);

struct FidelityResult {
  real_t oracle_loss = 0;
  real_t oracle_accuracy = 0;
};

// Generates n_z samples per label vector with fresh noise and scores them
// with the oracle.
FidelityResult label_fidelity(const ModelSpec& spec_g, const ParamSet& gen,
                              const ModelSpec& spec_oracle, const ParamSet& oracle,
                              const std::vector<LabelVector>& labels, int n_z,
                              uint64_t seed);

struct SweepSpec {
  int label_index = 0;
  std::vector<real_t> values{-1, -0.5, 0, 0.5, 1, 2, 3};
  LabelVector fixed_labels;  // template; defaults to all zeros
  int n_z = 64;
  uint64_t seed = 0;

  void validate(int label_dim) const;
};

struct SweepPoint {
  real_t value = 0;
  Tensor samples;  // n_z generated samples
  // Mean scalar projection of (sample - base) onto the swept label's
  // ground-truth direction; present in synthetic mode only.
  std::optional<real_t> mean_projection;
  std::vector<real_t> projections;
};

// Sweeps one label over spec.values while reusing the same noise draws for
// every value, so row i of every grid column shares its z.
std::vector<SweepPoint> sweep(const ModelSpec& spec_g, const ParamSet& gen,
                              const SweepSpec& spec,
                              const SyntheticDescriptor* synthetic);

// Tiles samples (denormalized from [-1,1] to 8 bit) row-major into one
// raster image. rows * cols must equal the sample count.
void emit_grid(const Tensor& samples, int rows, int cols, const std::string& path);

// Long-format metric report: one (config, metric, value) row per entry.
struct EvalReport {
  struct Row {
    std::string config;
    std::string metric;
    real_t value;
  };
  std::vector<Row> rows;

  void add(const std::string& config, const std::string& metric, real_t value);
};

void emit_report(const EvalReport& report, const std::string& path);
EvalReport read_report(const std::string& path);

// Spearman rank correlation (average ranks on ties).
double spearman_rank_correlation(const std::vector<real_t>& xs, const std::vector<real_t>& ys);

}  // namespace controlgan
