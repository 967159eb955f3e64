#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "rabf/errors.hpp"
#include "rabf/rng.hpp"

namespace rabf {

using ComplexVec = std::vector<std::complex<double>>;

inline bool all_finite(std::span<const std::complex<double>> v) {
  for (const auto& z : v) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

inline double squared_norm(std::span<const std::complex<double>> v) {
  double acc = 0.0;
  for (const auto& z : v) acc += std::norm(z);
  return acc;
}

inline double euclidean_norm(std::span<const std::complex<double>> v) {
  return std::sqrt(squared_norm(v));
}

/// Hermitian inner product <a, b> = a^H b (conjugate on the first argument).
inline std::complex<double> inner_product(std::span<const std::complex<double>> a,
                                          std::span<const std::complex<double>> b) {
  if (a.size() != b.size()) throw ConfigError("inner_product: size mismatch");
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

/// K x N matrix of device channels, one row per device. Immutable after
/// construction and safe to share across threads.
class ChannelSet {
 public:
  ChannelSet(std::size_t devices, std::size_t antennas, ComplexVec entries)
      : devices_(devices), antennas_(antennas), data_(std::move(entries)) {
    if (devices_ == 0 || antennas_ == 0)
      throw ConfigError("ChannelSet: device and antenna counts must be >= 1");
    if (data_.size() != devices_ * antennas_)
      throw ConfigError("ChannelSet: entry count does not match K*N");
    if (!all_finite(data_)) throw ConfigError("ChannelSet: non-finite entry");
  }

  [[nodiscard]] std::size_t num_devices() const noexcept { return devices_; }
  [[nodiscard]] std::size_t num_antennas() const noexcept { return antennas_; }

  [[nodiscard]] std::span<const std::complex<double>> row(std::size_t device) const {
    return {data_.data() + device * antennas_, antennas_};
  }

 private:
  std::size_t devices_;
  std::size_t antennas_;
  ComplexVec data_;
};

/// Unit-norm receive combining vector. Vectors whose norm deviates from 1 by
/// more than 1e-12 are re-normalized, never rejected.
class Beamformer {
 public:
  static constexpr double kNormTolerance = 1e-12;

  explicit Beamformer(ComplexVec v) : vec_(std::move(v)) {
    if (vec_.empty()) throw ConfigError("Beamformer: empty vector");
    if (!all_finite(vec_)) throw ConfigError("Beamformer: non-finite entry");
    const double n = euclidean_norm(vec_);
    if (!(n > 0.0)) throw ConfigError("Beamformer: zero vector");
    if (std::abs(n - 1.0) > kNormTolerance) {
      for (auto& z : vec_) z /= n;
    }
  }

  [[nodiscard]] const ComplexVec& vec() const noexcept { return vec_; }
  [[nodiscard]] std::size_t size() const noexcept { return vec_.size(); }

 private:
  ComplexVec vec_;
};

/// Draw a K x N channel matrix with i.i.d. CN(0,1) entries.
inline ChannelSet sample_channels(const RandomStream& stream, std::size_t devices,
                                  std::size_t antennas) {
  if (devices == 0 || antennas == 0)
    throw ConfigError("sample_channels: device and antenna counts must be >= 1");
  auto eng = stream.engine();
  ComplexVec data(devices * antennas);
  for (auto& z : data) z = complex_gaussian(eng);
  return ChannelSet(devices, antennas, std::move(data));
}

/// Draw a beamformer uniformly from the complex unit sphere by normalizing a
/// CN(0, I) vector.
inline Beamformer sample_beamformer(const RandomStream& stream, std::size_t antennas) {
  if (antennas == 0) throw ConfigError("sample_beamformer: antenna count must be >= 1");
  auto eng = stream.engine();
  ComplexVec v(antennas);
  for (auto& z : v) z = complex_gaussian(eng);
  return Beamformer(std::move(v));
}

}  // namespace rabf
