#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lifemine {

// All randomness flows from one root seed; independent stages pull named
// streams so each stage is reproducible in isolation. Sampling helpers are
// hand-rolled because std::*_distribution output is implementation-defined
// and the reports must be reproducible byte-for-byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Knuth's product method; large means are split additively so the
  // exp(-lambda) factor stays representable.
  std::uint64_t poisson(double lambda);

 private:
  std::mt19937_64 engine_;
};

// Derives a child seed for a named stream of a root seed.
std::uint64_t stream_seed(std::uint64_t root, std::string_view stream);

inline Rng stream_rng(std::uint64_t root, std::string_view stream) {
  return Rng(stream_seed(root, stream));
}

}  // namespace lifemine
