#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hsbm {

// splitmix64 finalizer; derives decorrelated child seeds from one master seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 with explicit draw helpers so that sampled sequences depend only
// on this code, not on library-specific distribution internals.
struct rng_t {
  std::mt19937_64 eng;

  explicit rng_t(std::uint64_t seed) : eng(seed) {}

  std::uint64_t next() { return eng(); }

  // Uniform in [0, 1) with 53 random bits.
  double u01() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n); unbiased by rejection of the top remainder band.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x, r;
    do {
      x = eng();
      r = x % n;
    } while (x - r > std::uint64_t(0) - n);
    return r;
  }

  int range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t k = v.size(); k > 1; --k) {
      std::size_t j = static_cast<std::size_t>(below(k));
      std::swap(v[k - 1], v[j]);
    }
  }
};

}  // namespace hsbm
