#pragma once

// Companion-app traffic generator: drives a simulated device through
// legitimate command exchanges and records them as a pcap capture.

#include <cstdint>
#include <vector>

#include "replaykit/capture.hpp"
#include "replaykit/sim/device.hpp"

namespace replaykit::sim {

/// Logical clock used for every synthesized capture.
inline constexpr std::int64_t kCaptureBaseUs = 1'700'000'000'000'000;
inline constexpr std::int64_t kFrameTickUs = 1000;
inline constexpr std::int64_t kCommandGapUs = 500'000;

/// [OBVERSE, REVERSE] x 5.
std::vector<DeviceState> default_training_script();

/// One legitimate command from `app`. Port 0 in `app` gives each command a
/// fresh ephemeral source port, as phone apps do. Returns the exchanged
/// payloads with timestamps relative to the start of the command. Throws
/// TriggerError when the device is unreachable or does not end up in
/// `target`.
std::vector<capture::PacketRecord> trigger_state(SimDevice& device, DeviceState target,
                                                 const Endpoint& app);

struct CompanionCapture {
  Bytes pcap;
  /// Every payload exchanged, as sent, timestamps relative to the first frame.
  std::vector<capture::PacketRecord> log;
};

CompanionCapture record_session(SimDevice& device, const Endpoint& app,
                                const std::vector<DeviceState>& script);

/// Runs `script` and returns the capture as a classic pcap byte stream.
Bytes companion_session(SimDevice& device, const Endpoint& app,
                        const std::vector<DeviceState>& script = default_training_script());

}  // namespace replaykit::sim
