#pragma once

#include <cstdint>

// Counter-based keyed random streams. Every draw is a pure function of
// (seed, key...), so sampling is reproducible independently of evaluation
// order and thread count.

namespace speclab::rng {

inline constexpr std::uint64_t kPhi64 = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t x) {
  x += kPhi64;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t keyed(std::uint64_t seed, std::uint64_t k0 = 0,
                           std::uint64_t k1 = 0, std::uint64_t k2 = 0,
                           std::uint64_t k3 = 0) {
  std::uint64_t h = mix64(seed ^ 0x853c49e6748fea9bull);
  h = mix64(h ^ k0);
  h = mix64(h ^ k1);
  h = mix64(h ^ k2);
  h = mix64(h ^ k3);
  return h;
}

// uniform in [0,1) from 53 mantissa bits
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform01(std::uint64_t seed, std::uint64_t k0 = 0,
                        std::uint64_t k1 = 0, std::uint64_t k2 = 0,
                        std::uint64_t k3 = 0) {
  return to_unit(keyed(seed, k0, k1, k2, k3));
}

// Sequential stream over a fixed key, for consumers that just need a
// deterministic sequence (solver start blocks, synthetic test matrices).
class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t k0 = 0,
                  std::uint64_t k1 = 0)
      : base_(keyed(seed, k0, k1)), counter_(0) {}

  std::uint64_t next_bits() { return mix64(base_ ^ counter_++); }
  double next_unit() { return to_unit(next_bits()); }
  // symmetric in (-1,1)
  double next_sym() { return 2.0 * next_unit() - 1.0; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_;
};

}  // namespace speclab::rng
