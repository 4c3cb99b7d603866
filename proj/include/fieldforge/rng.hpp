#pragma once

#include <cstdint>

namespace fieldforge {

namespace detail {

// splitmix64 finalizer (Vigna). Good avalanche for seed mixing.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace detail

// Deterministic 64-bit generator (splitmix64). Used instead of std::mt19937
// plus std::*_distribution so that seeded artifacts are bit-identical across
// platforms and standard library versions.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), n > 0. Multiply-shift; bias is O(n / 2^64).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  bool coin(double probability) { return uniform01() < probability; }

private:
  std::uint64_t state_;
};

// Derives an independent substream seed from a master seed and an ordered
// tuple of indices (class, k), (mosaic, row, col), ... so that per-item
// randomness does not depend on evaluation order.
template <class... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t seed, Parts... parts) {
  std::uint64_t h = detail::mix64(seed ^ 0x8e1f9c3a75d02b46ULL);
  ((h = detail::mix64(h ^ (static_cast<std::uint64_t>(parts) +
                           0x9e3779b97f4a7c15ULL))),
   ...);
  return h;
}

template <class... Parts>
RandomStream derive_stream(std::uint64_t seed, Parts... parts) {
  return RandomStream(derive_seed(seed, parts...));
}

} // namespace fieldforge
