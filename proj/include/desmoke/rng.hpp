#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace desmoke {

// splitmix64. Chosen over <random> engines because the distributions in the
// standard library are implementation-defined; every draw here is plain
// integer/float arithmetic and reproduces bit-identically across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in the open interval (0,1); endpoints unreachable.
  double uniform01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // n must be > 0.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double two_pi = 6.283185307179586476925286766559;
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream from (seed, tag[, k]). Used everywhere a
// module needs per-record / per-step randomness that must replay exactly.
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  Rng r(a ^ (0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull));
  return r.next();
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(a, b), c);
}

// Fisher-Yates; std::shuffle is not portable across standard libraries.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace desmoke
