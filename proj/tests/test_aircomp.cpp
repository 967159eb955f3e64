#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "rabf/aircomp.hpp"
#include "rabf/core.hpp"

using namespace rabf;

namespace {

ChannelSet scalar_channels(std::vector<double> values) {
  ComplexVec data;
  for (double v : values) data.emplace_back(v, 0.0);
  return ChannelSet(values.size(), 1, std::move(data));
}

Beamformer rotated(const Beamformer& m, double theta) {
  ComplexVec v = m.vec();
  const std::complex<double> phase = std::polar(1.0, theta);
  for (auto& z : v) z *= phase;
  return Beamformer(std::move(v));
}

}  // namespace

TEST_CASE("equivalent gains on scalar channels", "[aircomp]") {
  const ChannelSet ch = scalar_channels({2.0, 0.5, 1.0});
  const Beamformer m(ComplexVec{{1.0, 0.0}});
  const EquivalentGains g = equivalent_gains(m, ch, 1.0);
  REQUIRE(g.gain[0] == Catch::Approx(2.0));
  REQUIRE(g.gain[1] == Catch::Approx(0.5));
  REQUIRE(g.gain[2] == Catch::Approx(1.0));
  REQUIRE(g.device_mse[0] == Catch::Approx(0.25));
  REQUIRE(g.device_mse[1] == Catch::Approx(4.0));
  REQUIRE(g.device_mse[2] == Catch::Approx(1.0));
}

TEST_CASE("equivalent gains are phase invariant", "[aircomp]") {
  const ChannelSet ch = sample_channels({3, 0}, 12, 4);
  const Beamformer m = sample_beamformer({4, 0}, 4);
  const EquivalentGains a = equivalent_gains(m, ch, 2.0);
  const EquivalentGains b = equivalent_gains(rotated(m, 1.234), ch, 2.0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    REQUIRE(a.gain[k] == Catch::Approx(b.gain[k]).margin(1e-12));
    REQUIRE(a.device_mse[k] == Catch::Approx(b.device_mse[k]).margin(1e-12));
  }
}

TEST_CASE("orthogonal channel yields infinite device mse", "[aircomp]") {
  ComplexVec data{{0.0, 0.0}, {1.0, 0.0}};
  const ChannelSet ch(1, 2, std::move(data));
  const Beamformer m(ComplexVec{{1.0, 0.0}, {0.0, 0.0}});
  const EquivalentGains g = equivalent_gains(m, ch, 1.0);
  REQUIRE(g.gain[0] == 0.0);
  REQUIRE(std::isinf(g.device_mse[0]));
}

TEST_CASE("equivalent gains validates dimensions and power", "[aircomp]") {
  const ChannelSet ch = sample_channels({5, 0}, 3, 4);
  const Beamformer m = sample_beamformer({5, 1}, 2);
  REQUIRE_THROWS_AS(equivalent_gains(m, ch, 1.0), ConfigError);
  const Beamformer ok = sample_beamformer({5, 1}, 4);
  REQUIRE_THROWS_AS(equivalent_gains(ok, ch, 0.0), ConfigError);
}

TEST_CASE("scaling factor is the worst selected device mse", "[aircomp]") {
  const ChannelSet ch = scalar_channels({2.0, 0.5, 1.0});
  const Beamformer m(ComplexVec{{1.0, 0.0}});
  const EquivalentGains g = equivalent_gains(m, ch, 1.0);

  const std::vector<std::size_t> both{0, 2};
  REQUIRE(scaling_factor(g, both) == Catch::Approx(1.0));
  const std::vector<std::size_t> single{0};
  REQUIRE(scaling_factor(g, single) == Catch::Approx(0.25));

  REQUIRE_THROWS_AS(scaling_factor(g, std::vector<std::size_t>{}), SelectionError);

  const ChannelSet degenerate = scalar_channels({0.0, 1.0});
  const EquivalentGains gd = equivalent_gains(m, degenerate, 1.0);
  const std::vector<std::size_t> zero_gain{0};
  REQUIRE_THROWS_AS(scaling_factor(gd, zero_gain), DegenerateChannelError);
}

TEST_CASE("transmit coefficients cancel fading and respect power", "[aircomp]") {
  const ChannelSet ch = scalar_channels({2.0});
  const Beamformer m(ComplexVec{{1.0, 0.0}});
  const std::vector<std::size_t> sel{0};
  const auto b = transmit_coefficients(m, ch, sel, 0.25);
  REQUIRE(b[0].real() == Catch::Approx(1.0));
  REQUIRE(std::norm(b[0]) == Catch::Approx(1.0));  // worst device at the power bound

  // 1 - sqrt(eta) (m^H h) b == 0 by construction.
  const std::complex<double> residual =
      1.0 - std::sqrt(0.25) * inner_product(m.vec(), ch.row(0)) * b[0];
  REQUIRE(std::abs(residual) <= 1e-9);
}

TEST_CASE("random designs meet the exactness properties", "[aircomp]") {
  const RandomStream base{2024, 0};
  for (std::size_t rep = 0; rep < 50; ++rep) {
    const RandomStream trial = base.substream(rep);
    auto eng = trial.substream(0).engine();
    const std::size_t devices = 2 + uniform_index(eng, 20);
    const std::size_t antennas = 1 + uniform_index(eng, 8);
    const std::size_t count = 1 + uniform_index(eng, devices);
    const double power = 0.25 + 2.0 * uniform_unit(eng);

    const ChannelSet ch = sample_channels(trial.substream(1), devices, antennas);
    const Beamformer m = sample_beamformer(trial.substream(2), antennas);
    const EquivalentGains g = equivalent_gains(m, ch, power);

    std::vector<std::size_t> sel;
    for (std::size_t k = 0; k < count; ++k) sel.push_back(k);
    const AirCompDesign design = make_design(m, ch, g, sel);

    double max_power = 0.0;
    for (std::size_t i = 0; i < sel.size(); ++i) {
      const std::complex<double> residual =
          1.0 - std::sqrt(design.scaling) *
                    inner_product(m.vec(), ch.row(sel[i])) * design.coefficients[i];
      REQUIRE(std::abs(residual) <= 1e-9);
      const double p = std::norm(design.coefficients[i]);
      REQUIRE(p <= power * (1.0 + 1e-9));
      max_power = std::max(max_power, p);
    }
    REQUIRE(max_power == Catch::Approx(power).epsilon(1e-6));
  }
}

TEST_CASE("aggregate mse is the scaled noise power", "[aircomp]") {
  REQUIRE(aggregate_mse(1.0, 0.5) == Catch::Approx(0.5));
  REQUIRE(aggregate_mse(0.25, 1.0) == Catch::Approx(0.25));
  REQUIRE(aggregate_mse(3.0, 0.0) == 0.0);
}

TEST_CASE("noiseless aggregation is exact", "[aircomp]") {
  const ChannelSet ch = sample_channels({8, 0}, 6, 3);
  const Beamformer m = sample_beamformer({8, 1}, 3);
  const EquivalentGains g = equivalent_gains(m, ch, 1.5);
  const std::vector<std::size_t> sel{0, 2, 5};
  const AirCompDesign design = make_design(m, ch, g, sel);

  const std::vector<double> symbols{0.3, -1.2, 0.9};
  const ComplexVec noise(3, {0.0, 0.0});
  const AggregationResult res = simulate_aggregation(m, ch, sel, design, symbols, noise);
  REQUIRE(std::abs(res.error) <= 1e-9);
  REQUIRE(res.received.real() == Catch::Approx(0.3 - 1.2 + 0.9).margin(1e-9));
}

TEST_CASE("single-device hand aggregation", "[aircomp]") {
  const ChannelSet ch = scalar_channels({2.0});
  const Beamformer m(ComplexVec{{1.0, 0.0}});
  const EquivalentGains g = equivalent_gains(m, ch, 1.0);
  const std::vector<std::size_t> sel{0};
  const AirCompDesign design = make_design(m, ch, g, sel);
  REQUIRE(design.scaling == Catch::Approx(0.25));

  const std::vector<double> symbols{1.0};
  const ComplexVec noise(1, {0.0, 0.0});
  const AggregationResult res = simulate_aggregation(m, ch, sel, design, symbols, noise);
  REQUIRE(res.received.real() == Catch::Approx(1.0));
  REQUIRE(std::abs(res.error) <= 1e-12);
}

TEST_CASE("empirical aggregation error matches eta sigma^2", "[aircomp]") {
  const ChannelSet ch = sample_channels({21, 0}, 10, 4);
  const Beamformer m = sample_beamformer({21, 1}, 4);
  const double power = 1.0;
  const double noise_var = 0.7;
  const EquivalentGains g = equivalent_gains(m, ch, power);
  const std::vector<std::size_t> sel{0, 1, 2, 3, 4};
  const AirCompDesign design = make_design(m, ch, g, sel);
  const std::vector<double> symbols{1.0, -0.5, 0.25, 2.0, -1.5};

  auto eng = RandomStream{21, 2}.engine();
  const std::size_t draws = 10'000;
  double acc = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    ComplexVec noise(4);
    for (auto& z : noise) z = std::sqrt(noise_var) * complex_gaussian(eng);
    const AggregationResult res =
        simulate_aggregation(m, ch, sel, design, symbols, noise);
    acc += std::norm(res.error);
  }
  const double empirical = acc / static_cast<double>(draws);
  const double expected = aggregate_mse(design.scaling, noise_var);
  REQUIRE(std::abs(empirical - expected) / expected < 0.05);
}

TEST_CASE("scaling and mse are phase invariant end to end", "[aircomp]") {
  const ChannelSet ch = sample_channels({33, 0}, 9, 5);
  const Beamformer m = sample_beamformer({33, 1}, 5);
  const Beamformer mr = rotated(m, std::numbers::pi / 3.0);
  const std::vector<std::size_t> sel{1, 4, 7};

  const EquivalentGains a = equivalent_gains(m, ch, 2.0);
  const EquivalentGains b = equivalent_gains(mr, ch, 2.0);
  REQUIRE(scaling_factor(a, sel) ==
          Catch::Approx(scaling_factor(b, sel)).margin(1e-12));
  REQUIRE(aggregate_mse(scaling_factor(a, sel), 1.3) ==
          Catch::Approx(aggregate_mse(scaling_factor(b, sel), 1.3)).margin(1e-12));

  // |b_k| is unchanged when the channel picks up a phase.
  ComplexVec shifted;
  for (std::size_t k = 0; k < ch.num_devices(); ++k)
    for (const auto& z : ch.row(k)) shifted.push_back(z * std::polar(1.0, 0.77));
  const ChannelSet ch_shifted(ch.num_devices(), ch.num_antennas(), std::move(shifted));
  const double eta = scaling_factor(a, sel);
  const auto coeff = transmit_coefficients(m, ch, sel, eta);
  const auto coeff_shifted = transmit_coefficients(m, ch_shifted, sel, eta);
  for (std::size_t i = 0; i < coeff.size(); ++i)
    REQUIRE(std::abs(coeff[i]) == Catch::Approx(std::abs(coeff_shifted[i])));
}
