#pragma once

#include <optional>
#include <string>
#include <vector>

namespace controlgan {

// Exit codes shared by every command:
//   0 success, 1 usage/config error, 2 numerical abort, 3 I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;
inline constexpr int kExitIo = 3;

struct PretrainOptions {
  std::string config_path;
  std::string out_path;
  std::optional<uint64_t> seed;
};

struct TrainOptions {
  std::string config_path;
  std::string classifier_path;
  std::string out_dir;
  bool resume = false;
  std::optional<int64_t> iterations;
  std::optional<uint64_t> seed;
  std::optional<std::string> mode;
};

struct GenerateOptions {
  std::string checkpoint_path;
  std::string labels;  // comma-separated reals, length label_dim
  int64_t count = 16;
  uint64_t seed = 0;
  std::string out_path;
};

struct SweepOptions {
  std::string checkpoint_path;
  int label_index = 0;
  std::string values;  // comma-separated increasing reals; empty = default
  int n_z = 0;         // 0 = mode-dependent default
  uint64_t seed = 0;
  std::string out_dir;
};

int cmd_pretrain(const PretrainOptions& opts);
int cmd_train(const TrainOptions& opts);
int cmd_generate(const GenerateOptions& opts);
int cmd_sweep(const SweepOptions& opts);
int cmd_gradcheck(uint64_t seed);

// Full argv-style entry point (excluding the program name).
int run_cli(const std::vector<std::string>& args);

}  // namespace controlgan
