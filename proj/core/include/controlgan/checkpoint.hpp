#pragma once

#include <string>

#include "controlgan/config.hpp"
#include "controlgan/trainer.hpp"

namespace controlgan {

// Binary checkpoint: 4-byte magic "CGCK", u32 format version, u8 kind,
// u8 scalar width, then length-prefixed named sections. Little-endian
// throughout; floats are stored raw at the build's scalar width, so
// save -> load -> save is byte-identical. Version or width mismatches are
// rejected, never migrated.
inline constexpr uint32_t kCheckpointVersion = 1;

enum class CheckpointKind : uint8_t { full = 0, classifier = 1 };

struct LoadedCheckpoint {
  CheckpointKind kind = CheckpointKind::full;
  FullConfig config;
  TrainState state;      // populated for kind == full
  ParamSet classifier;   // populated for kind == classifier
};

void save_checkpoint(const std::string& path, const FullConfig& config,
                     const TrainState& state);
void save_classifier_checkpoint(const std::string& path, const FullConfig& config,
                                const ParamSet& theta_c);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace controlgan
