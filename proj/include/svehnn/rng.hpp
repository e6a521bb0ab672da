#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace svehnn {

// SplitMix64 generator with explicit substream derivation. All randomness in
// the library flows through this so that runs are reproducible bit-for-bit
// for a fixed seed, independent of platform library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Independent stream for (seed, stream). Workers use the stream id of the
  // unit of work (feature, permutation, example), so results do not depend
  // on scheduling.
  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    const std::uint64_t a = mix(seed + 0x9E3779B97F4A7C15ULL);
    const std::uint64_t b = mix(stream ^ 0xD1B54A32D192ED03ULL);
    return Rng(a ^ (b + 0x8CB92BA72F3D8DD7ULL));
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; avoids log(0) by shifting the first uniform into (0, 1]
  double normal() {
    const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.2831853071795864769 * u2);
  }

  // unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t rem = (0xFFFFFFFFFFFFFFFFULL % n + 1) % n;
    const std::uint64_t bound = 0xFFFFFFFFFFFFFFFFULL - rem;
    std::uint64_t r = next();
    while (r > bound) r = next();
    return r % n;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace svehnn
