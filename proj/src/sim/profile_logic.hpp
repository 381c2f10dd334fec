#pragma once

#include <memory>
#include <vector>

#include "replaykit/sim/device.hpp"

namespace replaykit::sim {

/// The companion side of one command exchange. TCP exchanges of one command
/// share a connection; UDP ones share a source port.
class AppChannel {
 public:
  virtual ~AppChannel() = default;
  /// Sends one message, waits for the device to process it, and returns the
  /// `expected_responses` replies.
  virtual std::vector<Bytes> exchange(const Bytes& message, std::size_t expected_responses) = 0;
};

struct AppContext {
  AppCore& app;
  Bytes secret;
  Bytes session_key;
  std::uint64_t clock_s = 0;
};

class ProfileLogic {
 public:
  virtual ~ProfileLogic() = default;

  /// Device side. Called with the device state locked.
  virtual std::vector<Bytes> on_message(const Bytes& message, DeviceCore::Connection& conn,
                                        DeviceCore& core) const = 0;
  /// Companion side: one legitimate command driving the device to `target`.
  virtual void run_command(DeviceState target, AppChannel& channel, AppContext& ctx) const = 0;
  /// Power-on hook; `rekey` is false only for restarts that keep key material.
  virtual void on_boot(DeviceCore&, bool /*rekey*/) const {}
};

std::unique_ptr<ProfileLogic> make_logic(const DeviceProfile& profile);

}  // namespace replaykit::sim
