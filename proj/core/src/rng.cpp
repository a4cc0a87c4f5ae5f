#include "controlgan/rng.hpp"

#include <cmath>

namespace controlgan {

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) {
  uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64(sm);
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

real_t Rng::uniform_open(real_t a, real_t b) {
  // 53 random bits, offset by half a step: (k + 0.5) / 2^53 lies strictly
  // inside (0, 1).
  const double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  return a + static_cast<real_t>(u) * (b - a);
}

real_t Rng::gaussian(real_t sigma) {
  const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  return static_cast<real_t>(z) * sigma;
}

uint64_t Rng::bounded(uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

Rng Rng::fork(uint64_t stream_id) const {
  uint64_t sm = s_[0] ^ rotl(s_[2], 29) ^ (stream_id * 0x9e3779b97f4a7c15ULL);
  Rng child(0);
  for (auto& w : child.s_) w = splitmix64(sm);
  return child;
}

}  // namespace controlgan
