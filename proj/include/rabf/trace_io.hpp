#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "rabf/protocol.hpp"

namespace rabf {

inline const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::BeamformerBroadcast: return "beamformer_broadcast";
    case MessageKind::GainFeedback: return "gain_feedback";
    case MessageKind::ThresholdBroadcast: return "threshold_broadcast";
  }
  return "unknown";
}

/// Serialize a trace as JSON lines, one message per line. The beamformer
/// broadcast carries its 2N real scalars inline; feedback and threshold
/// messages carry their single value.
inline std::string trace_to_json_lines(const ProtocolTrace& trace) {
  std::string out;
  for (const auto& msg : trace.messages) {
    nlohmann::json line;
    line["kind"] = to_string(msg.kind);
    if (msg.sender == kAggregator) {
      line["sender"] = "aggregator";
    } else {
      line["sender"] = msg.sender;
    }
    line["payload_scalars"] = msg.payload_scalars;
    if (msg.kind == MessageKind::BeamformerBroadcast) {
      nlohmann::json values = nlohmann::json::array();
      for (const auto& z : trace.beamformer.vec()) {
        values.push_back(z.real());
        values.push_back(z.imag());
      }
      line["values"] = std::move(values);
    } else {
      line["value"] = msg.value;
      if (msg.kind == MessageKind::ThresholdBroadcast && !trace.tie_id_list.empty()) {
        line["tie_id_list"] = trace.tie_id_list;
      }
    }
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace rabf
