#pragma once

// Reproducible random numbers.
//
// Generator: SplitMix64 (Steele, Lea, Flood 2014). The k-th output of a
// stream seeded with s is mix(s + k * 0x9E3779B97F4A7C15), with
//   mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//           z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31.
// Uniforms take the top 53 bits. A complex CN(0, v) draw uses one Box-Muller
// pair: sqrt(-v ln u1) * exp(i 2 pi u2), i.e. real and imaginary parts each
// N(0, v/2).
//
// Sub-streams are derived with derive_seed(parent, index), so realization r
// of a sweep is independent of how many realizations the sweep has.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace symrad {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

/// Seed of sub-stream `index` of `parent`.
inline constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                           std::uint64_t index) noexcept {
  return splitmix64_mix(splitmix64_mix(parent ^ 0x6A09E667F3BCC909ULL) +
                        (index + 1) * 0x9E3779B97F4A7C15ULL);
}

class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += kGamma;
    return splitmix64_mix(state_);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double uniform_open_zero() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> cscg(double variance = 1.0) noexcept {
    const double u1 = uniform_open_zero();
    const double u2 = uniform();
    const double r = std::sqrt(-variance * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  /// exp(i phi), phi uniform on [0, 2 pi).
  std::complex<double> unit_phase() noexcept {
    const double phi = 2.0 * std::numbers::pi * uniform();
    return {std::cos(phi), std::sin(phi)};
  }

 private:
  std::uint64_t state_;
};

}  // namespace symrad
