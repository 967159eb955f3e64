#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace rabf {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer; full 64-bit avalanche.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(splitmix64(a) ^ (b + kGolden));
}

}  // namespace detail

/// Handle to a deterministic random stream. The same (seed, stream) pair
/// always yields the same draw sequence, independent of which other streams
/// exist or on which thread it is consumed. Substreams are derived by hashing
/// the stream index, so stream families can be nested (per trial, per draw)
/// without coordination.
struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  [[nodiscard]] constexpr RandomStream substream(std::uint64_t index) const noexcept {
    return RandomStream{seed, detail::mix64(stream, index)};
  }

  [[nodiscard]] std::mt19937_64 engine() const {
    return std::mt19937_64{detail::mix64(seed, stream)};
  }
};

/// Uniform double in [0, 1) with 53-bit resolution.
inline double uniform_unit(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1]; safe as a std::log argument.
inline double uniform_positive(std::mt19937_64& eng) {
  return static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;
}

/// One CN(0,1) draw: squared modulus Exp(1), phase uniform on [0, 2pi).
/// Real and imaginary parts are each N(0, 1/2), so E|z|^2 = 1.
inline std::complex<double> complex_gaussian(std::mt19937_64& eng) {
  const double modulus = std::sqrt(-std::log(uniform_positive(eng)));
  const double phase = 2.0 * std::numbers::pi * uniform_unit(eng);
  return std::polar(modulus, phase);
}

/// Uniform index in [0, n). Rejection sampling keeps the draw exactly uniform.
inline std::size_t uniform_index(std::mt19937_64& eng, std::size_t n) {
  const std::uint64_t span = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x = eng();
  while (x >= limit) x = eng();
  return static_cast<std::size_t>(x % span);
}

}  // namespace rabf
