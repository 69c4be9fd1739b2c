#pragma once

// Seeded, splittable random number generation. Every stochastic routine in
// the library takes an explicit 64-bit seed and derives sub-streams with
// derive_seed, so runs are reproducible bit-exactly within one build.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sqmet::rng {

namespace detail {
// SplitMix64 finalizer (Stafford mix 13).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

// SplitMix64 stream.
class SplitMix64 {
 public:
  constexpr explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return detail::mix64(state_);
  }

  // Uniform in (0, 1]; never returns 0 so log() below is safe.
  double uniform01() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  // Standard normal via Box-Muller. No rejection loop, so the draw count
  // per variate is fixed and sequences are reproducible.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Deterministic sub-seed for a worker/stream index.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return detail::mix64(seed ^ (detail::mix64(stream + 0x632be59bd9b4e019ull) +
                               0x9e3779b97f4a7c15ull));
}

}  // namespace sqmet::rng
