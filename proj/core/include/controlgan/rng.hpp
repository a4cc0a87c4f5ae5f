#pragma once

#include <array>
#include <cstdint>

#include "controlgan/types.hpp"

namespace controlgan {

// xoshiro256++ with splitmix64 seeding. Hand-rolled so that sequences,
// serialized state and derived substreams are identical across compilers
// and standard libraries; byte-identical checkpoints depend on this.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform on the open interval (a, b); never returns an endpoint.
  real_t uniform_open(real_t a, real_t b);

  // Zero-mean Gaussian via Box-Muller. Stateless between calls (the second
  // variate is discarded) so checkpointed state stays four words.
  real_t gaussian(real_t sigma);

  // Unbiased draw from [0, n) by rejection.
  uint64_t bounded(uint64_t n);

  // Deterministically derived independent substream.
  Rng fork(uint64_t stream_id) const;

  std::array<uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<uint64_t, 4> s_{};
};

}  // namespace controlgan
