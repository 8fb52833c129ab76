#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace griffin {

// Seeded random source with explicit substream derivation. All randomness in
// the project flows from one root seed; substreams are derived by counter so
// results do not depend on call order elsewhere in the program or on
// implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed)), engine_(state_) {}

  // Independent substream for (this seed, stream). Deterministic.
  Rng child(std::uint64_t stream) const {
    return Rng(state_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n), n >= 1. Rejection sampling, bias-free.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Uniform double in [0, 1) with 53 bits.
  double next_real() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (fixed algorithm, platform-independent).
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_real();
    while (u1 <= 0.0) u1 = next_real();
    const double u2 = next_real();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = std::size_t(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t state_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace griffin
