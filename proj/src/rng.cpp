#include "lifemine/rng.hpp"

#include <cmath>

namespace lifemine {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t root, std::string_view stream) {
  return splitmix64(root ^ fnv1a64(stream));
}

std::uint64_t Rng::poisson(double lambda) {
  if (!(lambda > 0.0)) return 0;
  std::uint64_t total = 0;
  // Chunk the mean so exp(-chunk) never underflows.
  while (lambda > 16.0) {
    double chunk = 16.0;
    double l = std::exp(-chunk);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform_pos();
    } while (p > l);
    total += k - 1;
    lambda -= chunk;
  }
  double l = std::exp(-lambda);
  std::uint64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform_pos();
  } while (p > l);
  return total + k - 1;
}

}  // namespace lifemine
