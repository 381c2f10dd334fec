#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "replaykit/capture.hpp"

namespace replaykit::sim {

/// Behaviour families of the simulated devices.
///
///  CleartextEcho    plain JSON command, fixed JSON acknowledgment, no authentication
///  SignedCleartext  JSON with a signature over a static per-device secret; replays verify
///  EncodedFixed     fixed opaque command bytes per state, one fixed opaque reply
///  SessionKey       command encrypted under a session key that changes on restart
///  TlsLike          TLS/DTLS-shaped records bound to a per-connection server random
///  Silent           rolling-code command, never replies
enum class Behavior { CleartextEcho, SignedCleartext, EncodedFixed, SessionKey, TlsLike, Silent };

enum class DeviceState { Obverse, Reverse };

enum class Scenario { NonRestart, Restart };

std::string_view to_string(Behavior b);
std::string_view to_string(DeviceState s);
std::string_view to_string(Scenario s);
Behavior behavior_from_string(std::string_view s);
DeviceState device_state_from_string(std::string_view s);
Scenario scenario_from_string(std::string_view s);

inline constexpr Behavior kAllBehaviors[] = {Behavior::CleartextEcho, Behavior::SignedCleartext,
                                             Behavior::EncodedFixed,  Behavior::SessionKey,
                                             Behavior::TlsLike,       Behavior::Silent};

capture::Transport default_transport(Behavior b);

/// Whether a replayed OBVERSE command takes effect on this behaviour in the
/// given scenario.
bool is_vulnerable(Behavior b, Scenario s, bool rekey_on_restart = true);

struct DeviceProfile {
  Behavior behavior = Behavior::CleartextEcho;
  capture::Transport transport = capture::Transport::Tcp;
  std::uint16_t port = 0;  // 0 picks a free ephemeral port
  bool rekey_on_restart = true;
  std::string bind_address = "127.0.0.1";
  /// Seeds device-side randomness (session keys, server randoms, secrets).
  /// Unset means a fresh nondeterministic seed.
  std::optional<std::uint64_t> seed;

  static DeviceProfile for_behavior(Behavior b) {
    DeviceProfile p;
    p.behavior = b;
    p.transport = default_transport(b);
    return p;
  }
};

}  // namespace replaykit::sim

namespace replaykit::sim {

/// CleartextEcho's acknowledgment for a state change, byte for byte.
std::string cleartext_ack(DeviceState s);

/// TlsLike's answer to any record it cannot authenticate (fatal bad_record_mac).
Bytes tls_alert(capture::Transport t);

}  // namespace replaykit::sim
