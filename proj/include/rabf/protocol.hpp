#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "rabf/aircomp.hpp"
#include "rabf/core.hpp"
#include "rabf/errors.hpp"
#include "rabf/rng.hpp"
#include "rabf/selection.hpp"

namespace rabf {

enum class MessageKind { BeamformerBroadcast, GainFeedback, ThresholdBroadcast };

inline constexpr int kAggregator = -1;

/// One message of the CSI-free round. Only scalars cross the wire: the
/// beamformer broadcast carries 2N reals, a gain feedback carries one real,
/// the threshold broadcast carries one real (plus an explicit ID list in the
/// measure-zero tie case).
struct ProtocolMessage {
  MessageKind kind = MessageKind::BeamformerBroadcast;
  int sender = kAggregator;  // kAggregator or a device index
  std::size_t payload_scalars = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
};

struct ProtocolTrace {
  std::vector<ProtocolMessage> messages;
  std::vector<std::size_t> selected;       // sorted ascending
  double threshold = 0.0;                  // zeta, on |m^H h|^2
  Beamformer beamformer;                   // the broadcast vector
  std::vector<std::size_t> tie_id_list;    // nonempty only when gains tie at zeta

  [[nodiscard]] std::size_t payload_total() const {
    std::size_t total = 0;
    for (const auto& msg : messages) total += msg.payload_scalars;
    return total;
  }

  [[nodiscard]] std::size_t feedback_count() const {
    return static_cast<std::size_t>(
        std::count_if(messages.begin(), messages.end(), [](const ProtocolMessage& m) {
          return m.kind == MessageKind::GainFeedback;
        }));
  }
};

namespace detail {

inline std::vector<double> local_gain_squares(const Beamformer& m,
                                              const ChannelSet& ch) {
  std::vector<double> g2(ch.num_devices());
  for (std::size_t k = 0; k < ch.num_devices(); ++k)
    g2[k] = std::norm(inner_product(m.vec(), ch.row(k)));
  return g2;
}

}  // namespace detail

/// One round of the feedback-based procedure for fixed-count selection:
/// the aggregator broadcasts a random beamformer, every device feeds back its
/// scalar weighted gain |h_k^H m|^2, the aggregator broadcasts the S-th
/// largest value as the threshold, and devices with gain >= threshold select
/// themselves. If several devices tie at the threshold the aggregator
/// resolves the overflow with an explicit ID list so exactly S are kept.
inline ProtocolTrace run_protocol_mse_min(const ChannelSet& ch, std::size_t count,
                                          double power, const RandomStream& stream) {
  if (count == 0 || count > ch.num_devices())
    throw ConfigError("run_protocol_mse_min: count must satisfy 1 <= S <= K");
  if (!(power > 0.0)) throw ConfigError("run_protocol_mse_min: power must be positive");

  Beamformer m = sample_beamformer(stream.substream(1), ch.num_antennas());
  std::vector<ProtocolMessage> messages;
  messages.push_back({MessageKind::BeamformerBroadcast, kAggregator, 2 * m.size(),
                      std::numeric_limits<double>::quiet_NaN()});

  const std::vector<double> gain2 = detail::local_gain_squares(m, ch);
  for (std::size_t k = 0; k < gain2.size(); ++k)
    messages.push_back({MessageKind::GainFeedback, static_cast<int>(k), 1, gain2[k]});

  // Aggregator side: S-th largest fed-back value becomes the threshold.
  std::vector<std::size_t> order(gain2.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto by_gain_desc_then_index = [&](std::size_t a, std::size_t b) {
    if (gain2[a] != gain2[b]) return gain2[a] > gain2[b];
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + (count - 1), order.end(),
                   by_gain_desc_then_index);
  const double threshold = gain2[order[count - 1]];

  std::vector<std::size_t> self_selected;
  for (std::size_t k = 0; k < gain2.size(); ++k)
    if (gain2[k] >= threshold) self_selected.push_back(k);

  ProtocolMessage threshold_msg{MessageKind::ThresholdBroadcast, kAggregator, 1,
                                threshold};
  std::vector<std::size_t> tie_id_list;
  std::vector<std::size_t> selected;
  if (self_selected.size() == count) {
    selected = std::move(self_selected);
  } else {
    // Gain tie at the threshold: broadcast the kept IDs explicitly.
    selected.assign(order.begin(), order.begin() + count);
    std::sort(selected.begin(), selected.end());
    tie_id_list = selected;
    threshold_msg.payload_scalars += count;
  }
  messages.push_back(threshold_msg);

  ProtocolTrace trace{std::move(messages), std::move(selected), threshold,
                      std::move(m), std::move(tie_id_list)};
  return trace;
}

/// One round of the feedback-free procedure for threshold selection: the
/// aggregator derives the gain threshold zeta = sigma^2 / (P * MSE_cap)
/// directly and broadcasts it along with the beamformer; devices self-select
/// with no uplink control traffic at all.
inline ProtocolTrace run_protocol_max_devices(const ChannelSet& ch, double max_mse,
                                              double power, double noise_var,
                                              const RandomStream& stream) {
  if (!(max_mse > 0.0))
    throw ConfigError("run_protocol_max_devices: cap must be positive");
  if (!(power > 0.0) || !(noise_var > 0.0))
    throw ConfigError("run_protocol_max_devices: power and noise must be positive");

  Beamformer m = sample_beamformer(stream.substream(1), ch.num_antennas());
  std::vector<ProtocolMessage> messages;
  messages.push_back({MessageKind::BeamformerBroadcast, kAggregator, 2 * m.size(),
                      std::numeric_limits<double>::quiet_NaN()});

  const double mse_cap_absolute = max_mse * noise_var;
  const double threshold = noise_var / (power * mse_cap_absolute);
  messages.push_back({MessageKind::ThresholdBroadcast, kAggregator, 1, threshold});

  const std::vector<double> gain2 = detail::local_gain_squares(m, ch);
  std::vector<std::size_t> selected;
  for (std::size_t k = 0; k < gain2.size(); ++k)
    if (gain2[k] >= threshold) selected.push_back(k);

  ProtocolTrace trace{std::move(messages), std::move(selected), threshold,
                      std::move(m), {}};
  return trace;
}

}  // namespace rabf
