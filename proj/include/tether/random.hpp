#pragma once

#include <cstdint>
#include <random>

namespace tether {

// Deterministic random source. std::mt19937_64 has a fully specified output
// sequence, and the uniform mapping below is fixed arithmetic, so a given seed
// produces the same draws on every platform (std::uniform_real_distribution is
// deliberately avoided: its algorithm is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Derives a per-run seed from a base seed and a run index so campaigns can use
// independent streams without correlated draws (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace tether
