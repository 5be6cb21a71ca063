#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace lcasel {

// Mixes a 64-bit value (splitmix64 finalizer). Used to derive independent
// seed streams from (seed, index) pairs so that parallel and serial
// execution consume identical randomness.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + stream);
}

// mt19937_64 with hand-rolled variate generation. The standard
// distributions are implementation-defined, so sampling goes through
// uniform01() only; output is then bit-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [0, 1): 53 random mantissa bits.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Draws an index with the given (normalized) probabilities by CDF
  // inversion. Falls through to the last index on accumulated rounding.
  int categorical(std::span<const double> probs) {
    const double u = uniform01();
    double cum = 0.0;
    for (std::size_t c = 0; c + 1 < probs.size(); ++c) {
      cum += probs[c];
      if (u < cum) return static_cast<int>(c);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  // Uniform point on the probability simplex via normalized exponentials.
  void simplex(std::span<double> out) {
    double sum = 0.0;
    for (double& v : out) {
      v = -std::log(1.0 - uniform01());  // 1-u in (0,1], no log(0)
      sum += v;
    }
    for (double& v : out) v /= sum;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace lcasel
