#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace srn {

// SplitMix64 finalizer, used to decorrelate derived stream seeds.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and a
/// (purpose, a, b) counter triple. Used everywhere a component needs its
/// own RNG stream, so that individual trajectories/chains can be re-run
/// in isolation.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t z = splitmix64(master ^ splitmix64(purpose));
  z = splitmix64(z ^ splitmix64(a));
  return splitmix64(z ^ splitmix64(b));
}

// Stream purposes for derive_seed.
inline constexpr std::uint64_t kSeedTrajectory = 1;
inline constexpr std::uint64_t kSeedObservation = 2;
inline constexpr std::uint64_t kSeedChain = 3;
inline constexpr std::uint64_t kSeedGradcheck = 4;

/// Seedable random generator with explicitly specified output transforms.
///
/// The engine is std::mt19937_64 (fully specified by the standard) and all
/// variates are produced by documented transforms of its raw 64-bit output,
/// so streams are reproducible across platforms and standard libraries:
///   uniform01: (x >> 11) * 2^-53, in [0, 1)
///   normal:    Box-Muller on two uniforms (cosine branch only)
///   exponential: -log(1 - uniform01) / rate
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential(double rate) {
    // 1 - uniform01 lies in (0, 1], so the log is finite.
    return -std::log(1.0 - uniform01()) / rate;
  }

  double normal() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace srn
