// Minimal tour of the library: sample a network, run both selection
// problems, and compare the achieved count with the closed-form expectation.

#include <cstdio>

#include "rabf/rabf.hpp"

int main() {
  const rabf::RandomStream stream{2024, 0};
  const std::size_t devices = 1000;
  const std::size_t antennas = 4;
  const double power = 1.0;  // 0 dB

  const rabf::ChannelSet channels =
      rabf::sample_channels(stream.substream(0), devices, antennas);

  // Problem 1: keep the 10 best devices, minimize the aggregate error.
  const rabf::SelectionOutcome mse_outcome =
      rabf::solve_mse_min(channels, 10, power, {100, stream.substream(1)});
  std::printf("kept %zu devices, achieved MSE/sigma^2 = %.4f (eta = %.4f)\n",
              mse_outcome.subset.size(), mse_outcome.objective,
              mse_outcome.design.scaling);

  // Problem 2: keep as many devices as the error cap allows.
  const double cap = 0.2;
  const rabf::SelectionOutcome count_outcome =
      rabf::solve_max_devices(channels, cap, power, {100, stream.substream(2)});
  const rabf::CountStats stats = rabf::selected_count_stats(devices, cap, power);
  std::printf("cap %.2f keeps %zu devices (a single draw averages %.1f)\n", cap,
              count_outcome.subset.size(), stats.expectation);

  // The distribution of the achieved error is known in closed form.
  const double median_mse =
      rabf::objective_mse_cdf(mse_outcome.objective, devices, 10, power);
  std::printf("a single random draw lands below this MSE with probability %.3f\n",
              median_mse);
  return 0;
}
