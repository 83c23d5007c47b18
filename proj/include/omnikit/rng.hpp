#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace omnikit {

// Deterministic splittable PRNG built on splitmix64. Substreams are derived
// from the root seed and a label, never from the current draw position, so
// adding draws in one subsystem cannot shift another subsystem's sequence.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : root_(seed), state_(mix_(seed)) {}

  SplitRng split(std::uint64_t label) const {
    return SplitRng(mix_(root_ ^ mix_(label * 0x9E3779B97F4A7C15ull + 0x243F6A8885A308D3ull)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix_(state_);
  }

  // [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // unbiased via rejection
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = ~0ull - ~0ull % n;
    for (;;) {
      std::uint64_t u = next_u64();
      if (u < limit) return u % n;
    }
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return mean + stddev * u * m;
  }

  // k distinct values from {0..n-1}, ascending (partial Fisher-Yates)
  std::vector<int> sample_subset(int n, int k);

  // permutation of {0..n-1}
  std::vector<int> permutation(int n);

  std::uint64_t root_seed() const { return root_; }

 private:
  static std::uint64_t mix_(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t root_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace omnikit
