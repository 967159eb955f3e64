#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "rabf/core.hpp"
#include "rabf/errors.hpp"

namespace rabf {

/// Per-device equivalent channel quantities seen through a fixed beamformer.
/// gain[k] is |m^H h_k|; device_mse[k] is the normalized error 1/(P gain^2)
/// the aggregation pays if device k is the binding one. A zero gain maps to
/// an infinite device_mse so the sort order stays total.
struct EquivalentGains {
  std::vector<double> gain;
  std::vector<double> device_mse;
  double power = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return gain.size(); }
};

inline EquivalentGains equivalent_gains(const Beamformer& m, const ChannelSet& ch,
                                        double power) {
  if (!(power > 0.0)) throw ConfigError("equivalent_gains: power must be positive");
  if (m.size() != ch.num_antennas())
    throw ConfigError("equivalent_gains: beamformer/channel dimension mismatch");
  const std::size_t devices = ch.num_devices();
  EquivalentGains out;
  out.power = power;
  out.gain.resize(devices);
  out.device_mse.resize(devices);
  for (std::size_t k = 0; k < devices; ++k) {
    const double g = std::abs(inner_product(m.vec(), ch.row(k)));
    out.gain[k] = g;
    out.device_mse[k] =
        g > 0.0 ? 1.0 / (power * g * g) : std::numeric_limits<double>::infinity();
  }
  return out;
}

/// Receive scaling that lets the worst selected device meet its power budget:
/// the largest 1/(P |m^H h_k|^2) over the subset.
inline double scaling_factor(const EquivalentGains& gains,
                             std::span<const std::size_t> selected) {
  if (selected.empty()) throw SelectionError("scaling_factor: empty device subset");
  double worst = 0.0;
  for (std::size_t k : selected) {
    const double y = gains.device_mse[k];
    if (!std::isfinite(y))
      throw DegenerateChannelError("scaling_factor: selected device has zero gain");
    worst = std::max(worst, y);
  }
  return worst;
}

/// Transmit coefficients b_k = (h_k^H m) / (sqrt(eta) |m^H h_k|^2). Each one
/// inverts its equivalent channel so the fading term cancels exactly.
inline std::vector<std::complex<double>> transmit_coefficients(
    const Beamformer& m, const ChannelSet& ch, std::span<const std::size_t> selected,
    double scaling) {
  if (!(scaling > 0.0))
    throw ConfigError("transmit_coefficients: scaling must be positive");
  const double root_scaling = std::sqrt(scaling);
  std::vector<std::complex<double>> coeffs;
  coeffs.reserve(selected.size());
  for (std::size_t k : selected) {
    const std::complex<double> g = inner_product(m.vec(), ch.row(k));
    const double g2 = std::norm(g);
    if (!(g2 > 0.0))
      throw DegenerateChannelError("transmit_coefficients: zero equivalent gain");
    coeffs.push_back(std::conj(g) / (root_scaling * g2));
  }
  return coeffs;
}

/// MSE of the aggregate under an exact transmit design: eta * sigma^2 for a
/// unit-norm beamformer.
inline double aggregate_mse(double scaling, double noise_var) {
  return scaling * noise_var;
}

/// Complete transmit design for one subset under one beamformer.
struct AirCompDesign {
  double scaling = 0.0;                            // eta
  std::vector<std::complex<double>> coefficients;  // b_k, aligned with the subset
  double mse_over_sigma2 = 0.0;
};

inline AirCompDesign make_design(const Beamformer& m, const ChannelSet& ch,
                                 const EquivalentGains& gains,
                                 std::span<const std::size_t> selected) {
  AirCompDesign design;
  design.scaling = scaling_factor(gains, selected);
  design.coefficients = transmit_coefficients(m, ch, selected, design.scaling);
  design.mse_over_sigma2 = design.scaling;  // ||m|| = 1
  return design;
}

struct AggregationResult {
  std::complex<double> received;  // y
  std::complex<double> error;     // sum of symbols - y
};

/// Signal-level pass through the aggregation chain: superpose the precoded
/// symbols, combine with m, amplify by sqrt(eta). With an exact design the
/// fading term vanishes and the error reduces to -sqrt(eta) m^H n.
inline AggregationResult simulate_aggregation(const Beamformer& m, const ChannelSet& ch,
                                              std::span<const std::size_t> selected,
                                              const AirCompDesign& design,
                                              std::span<const double> symbols,
                                              const ComplexVec& noise) {
  if (symbols.size() != selected.size() ||
      design.coefficients.size() != selected.size())
    throw ConfigError("simulate_aggregation: one symbol/coefficient per device");
  if (noise.size() != ch.num_antennas())
    throw ConfigError("simulate_aggregation: noise length must equal antenna count");

  std::complex<double> combined{0.0, 0.0};
  double desired = 0.0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const std::complex<double> g = inner_product(m.vec(), ch.row(selected[i]));
    combined += g * design.coefficients[i] * symbols[i];
    desired += symbols[i];
  }
  combined += inner_product(m.vec(), noise);

  AggregationResult res;
  res.received = std::sqrt(design.scaling) * combined;
  res.error = std::complex<double>(desired, 0.0) - res.received;
  return res;
}

}  // namespace rabf
