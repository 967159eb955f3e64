#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "rabf/aircomp.hpp"
#include "rabf/core.hpp"
#include "rabf/errors.hpp"
#include "rabf/rng.hpp"

namespace rabf {

/// Subset plus achieved objective, before a transmit design is attached.
/// For top-S selection the objective is the achieved MSE/sigma^2; for
/// threshold selection it is the selected-device count.
struct RankedSelection {
  std::vector<std::size_t> subset;  // sorted ascending
  double objective = 0.0;
};

/// Full outcome of a solver run.
struct SelectionOutcome {
  Beamformer beamformer;
  std::vector<std::size_t> subset;  // sorted ascending
  double objective = 0.0;
  AirCompDesign design;  // empty coefficients when the subset is empty
};

/// Best-of-N randomization setup. Draw j always consumes stream.substream(j),
/// so raising num_draws extends the draw sequence instead of reshuffling it.
struct RefinedConfig {
  std::size_t num_draws = 1;
  RandomStream stream;
};

/// Devices with the S largest equivalent gains; ties go to the lower index.
/// The objective is the largest device_mse within the subset.
inline RankedSelection select_top_s(const EquivalentGains& gains, std::size_t count) {
  const std::size_t devices = gains.size();
  if (count == 0 || count > devices)
    throw ConfigError("select_top_s: count must satisfy 1 <= S <= K");

  std::vector<std::size_t> order(devices);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto by_mse_then_index = [&](std::size_t a, std::size_t b) {
    if (gains.device_mse[a] != gains.device_mse[b])
      return gains.device_mse[a] < gains.device_mse[b];
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + (count - 1), order.end(),
                   by_mse_then_index);

  RankedSelection out;
  out.objective = gains.device_mse[order[count - 1]];
  out.subset.assign(order.begin(), order.begin() + count);
  std::sort(out.subset.begin(), out.subset.end());
  return out;
}

/// Devices whose individual MSE/sigma^2 stays within the cap (inclusive).
/// An empty result is valid; the objective is the subset size.
inline RankedSelection select_by_threshold(const EquivalentGains& gains, double max_mse) {
  if (!(max_mse > 0.0)) throw ConfigError("select_by_threshold: cap must be positive");
  RankedSelection out;
  for (std::size_t k = 0; k < gains.size(); ++k) {
    if (gains.device_mse[k] <= max_mse) out.subset.push_back(k);
  }
  out.objective = static_cast<double>(out.subset.size());
  return out;
}

namespace detail {

inline double worst_device_mse(const EquivalentGains& gains,
                               std::span<const std::size_t> subset) {
  double worst = 0.0;
  for (std::size_t k : subset) worst = std::max(worst, gains.device_mse[k]);
  return worst;
}

}  // namespace detail

/// Best-of-N_m random beamforming for the MSE-minimization problem. Draw j
/// uses cfg.stream.substream(j); the smallest achieved MSE/sigma^2 wins, with
/// ties resolved in favor of the earlier draw.
inline SelectionOutcome solve_mse_min(const ChannelSet& ch, std::size_t count,
                                      double power, const RefinedConfig& cfg) {
  if (cfg.num_draws == 0) throw ConfigError("solve_mse_min: num_draws must be >= 1");
  if (count == 0 || count > ch.num_devices())
    throw ConfigError("solve_mse_min: count must satisfy 1 <= S <= K");

  double best_objective = std::numeric_limits<double>::infinity();
  std::optional<Beamformer> best_beamformer;
  RankedSelection best_selection;
  for (std::size_t j = 1; j <= cfg.num_draws; ++j) {
    Beamformer m = sample_beamformer(cfg.stream.substream(j), ch.num_antennas());
    RankedSelection sel = select_top_s(equivalent_gains(m, ch, power), count);
    if (sel.objective < best_objective) {
      best_objective = sel.objective;
      best_selection = std::move(sel);
      best_beamformer = std::move(m);
    }
  }

  const EquivalentGains gains = equivalent_gains(*best_beamformer, ch, power);
  AirCompDesign design = make_design(*best_beamformer, ch, gains, best_selection.subset);
  return SelectionOutcome{std::move(*best_beamformer), std::move(best_selection.subset),
                          best_objective, std::move(design)};
}

/// Best-of-N_m random beamforming for the device-count maximization problem.
/// Larger subsets win; equal sizes prefer the smaller worst-case device MSE,
/// then the earlier draw. An empty subset is a valid outcome with objective 0.
inline SelectionOutcome solve_max_devices(const ChannelSet& ch, double max_mse,
                                          double power, const RefinedConfig& cfg) {
  if (cfg.num_draws == 0)
    throw ConfigError("solve_max_devices: num_draws must be >= 1");
  if (!(max_mse > 0.0)) throw ConfigError("solve_max_devices: cap must be positive");

  std::optional<Beamformer> best_beamformer;
  RankedSelection best_selection;
  double best_worst_mse = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (std::size_t j = 1; j <= cfg.num_draws; ++j) {
    Beamformer m = sample_beamformer(cfg.stream.substream(j), ch.num_antennas());
    const EquivalentGains gains = equivalent_gains(m, ch, power);
    RankedSelection sel = select_by_threshold(gains, max_mse);
    const double worst = detail::worst_device_mse(gains, sel.subset);
    const bool better =
        !have_best || sel.subset.size() > best_selection.subset.size() ||
        (sel.subset.size() == best_selection.subset.size() && worst < best_worst_mse);
    if (better) {
      best_selection = std::move(sel);
      best_worst_mse = worst;
      best_beamformer = std::move(m);
      have_best = true;
    }
  }

  AirCompDesign design;
  if (!best_selection.subset.empty()) {
    const EquivalentGains gains = equivalent_gains(*best_beamformer, ch, power);
    design = make_design(*best_beamformer, ch, gains, best_selection.subset);
  }
  const double objective = static_cast<double>(best_selection.subset.size());
  return SelectionOutcome{std::move(*best_beamformer), std::move(best_selection.subset),
                          objective, std::move(design)};
}

/// Exhaustive subset search for the top-S objective. Guarded to K <= 20; with
/// continuous gains its objective must coincide with select_top_s exactly.
inline RankedSelection brute_force_subset(const EquivalentGains& gains,
                                          std::size_t count) {
  const std::size_t devices = gains.size();
  if (devices > 20) throw ConfigError("brute_force_subset: K must be <= 20");
  if (count == 0 || count > devices)
    throw ConfigError("brute_force_subset: count must satisfy 1 <= S <= K");

  RankedSelection best;
  best.objective = std::numeric_limits<double>::infinity();
  const std::uint32_t full = std::uint32_t{1} << devices;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    if (std::popcount(mask) != static_cast<int>(count)) continue;
    double worst = 0.0;
    for (std::size_t k = 0; k < devices; ++k) {
      if (mask & (std::uint32_t{1} << k)) worst = std::max(worst, gains.device_mse[k]);
    }
    if (worst < best.objective) {
      best.objective = worst;
      best.subset.clear();
      for (std::size_t k = 0; k < devices; ++k) {
        if (mask & (std::uint32_t{1} << k)) best.subset.push_back(k);
      }
    }
  }
  return best;
}

/// Uniformly random S-subset with a random beamformer; the stand-in baseline
/// for comparing against gain-aware selection.
inline SelectionOutcome random_baseline(const ChannelSet& ch, std::size_t count,
                                        double power, const RandomStream& stream) {
  if (count == 0 || count > ch.num_devices())
    throw ConfigError("random_baseline: count must satisfy 1 <= S <= K");

  Beamformer m = sample_beamformer(stream.substream(1), ch.num_antennas());

  auto eng = stream.substream(2).engine();
  std::vector<std::size_t> order(ch.num_devices());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_index(eng, order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> subset(order.begin(), order.begin() + count);
  std::sort(subset.begin(), subset.end());

  const EquivalentGains gains = equivalent_gains(m, ch, power);
  AirCompDesign design = make_design(m, ch, gains, subset);
  const double objective = detail::worst_device_mse(gains, subset);
  return SelectionOutcome{std::move(m), std::move(subset), objective,
                          std::move(design)};
}

}  // namespace rabf
