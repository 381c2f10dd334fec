#pragma once

// Simulated IoT devices: a socket server loop driven by a behaviour profile,
// with restart semantics and ground-truth state inspection.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "replaykit/bytes.hpp"
#include "replaykit/capture.hpp"
#include "replaykit/errors.hpp"
#include "replaykit/net.hpp"
#include "replaykit/sim/profile.hpp"

namespace replaykit::sim {

class SpawnError : public Error {
 public:
  using Error::Error;
};

class TriggerError : public Error {
 public:
  using Error::Error;
};

/// Poll-driven TCP or UDP server on its own thread. Each inbound read is one
/// message; the handler's responses are sent back in order, a few
/// milliseconds apart so a reader sees them as separate segments.
class DeviceServer {
 public:
  /// `conn_id` identifies the TCP connection, or the UDP peer address.
  using Handler = std::function<std::vector<Bytes>(const Bytes& message, std::uint64_t conn_id)>;

  DeviceServer(capture::Transport transport, Endpoint bind, Handler handler);
  ~DeviceServer();
  DeviceServer(const DeviceServer&) = delete;
  DeviceServer& operator=(const DeviceServer&) = delete;

  /// Binds and starts serving. After the first start the bound port is
  /// reused, so a restarted device keeps its endpoint. Throws SpawnError.
  void start();
  /// Stops the loop and closes every socket. Idempotent.
  void stop();

  Endpoint endpoint() const;
  capture::Transport transport() const noexcept { return transport_; }

  std::uint64_t messages_handled() const;
  /// Waits until at least `target` messages have been fully handled.
  bool wait_handled(std::uint64_t target, std::chrono::milliseconds timeout) const;

  static constexpr std::chrono::milliseconds kResponseGap{5};

 private:
  void run_tcp();
  void run_udp();
  void finish_message();

  capture::Transport transport_;
  Endpoint bind_;
  Handler handler_;
  net::UniqueFd socket_;
  net::UniqueFd stop_event_;
  std::thread thread_;
  std::uint64_t next_conn_ = 1;

  mutable std::mutex mutex_;
  mutable std::condition_variable handled_cv_;
  std::uint64_t handled_ = 0;
};

class ProfileLogic;

/// Volatile and persistent state of one simulated device.
struct DeviceCore {
  DeviceState state = DeviceState::Reverse;
  std::uint64_t rng_state = 0;
  Bytes secret;       // static per-device secret shared with the paired app
  Bytes session_key;  // SessionKey behaviour only
  std::uint64_t last_counter = 0;
  std::uint64_t clock_s = 1'700'000'000;  // device wall clock, advances per message
  std::uint64_t boots = 1;

  struct Connection {
    Bytes client_random;
    Bytes server_random;
  };
  std::map<std::uint64_t, Connection> connections;

  Bytes random_bytes(std::size_t n);
};

/// App-side pairing state kept by the simulated companion app.
struct AppCore {
  std::uint64_t rng_state = 1;
  std::uint64_t message_counter = 0;
  std::uint64_t rolling_counter = 0;
  std::uint16_t next_port = 49152;

  Bytes random_bytes(std::size_t n);
};

class SimDevice {
 public:
  /// Spawns and starts serving. Initial state REVERSE. Throws SpawnError.
  explicit SimDevice(DeviceProfile profile);
  ~SimDevice();
  SimDevice(const SimDevice&) = delete;
  SimDevice& operator=(const SimDevice&) = delete;

  const DeviceProfile& profile() const noexcept { return profile_; }
  Endpoint endpoint() const { return server_.endpoint(); }

  DeviceState query_state() const;

  /// Power-cycle: drops connections and volatile state, re-keys SessionKey
  /// devices when configured, resets to REVERSE and listens again.
  void restart();

  std::uint64_t messages_handled() const { return server_.messages_handled(); }
  bool wait_handled(std::uint64_t target, std::chrono::milliseconds timeout) const {
    return server_.wait_handled(target, timeout);
  }

#ifdef REPLAYKIT_TEST_HOOKS
  Bytes session_key_for_test() const;
#endif

  // Used by the companion client. All of them lock the device state.
  template <class F>
  auto with_core(F&& f) const {
    std::lock_guard lock(core_mutex_);
    return f(core_);
  }
  const ProfileLogic& logic() const noexcept { return *logic_; }
  AppCore& app() noexcept { return app_; }
  std::mutex& control_mutex() const noexcept { return control_mutex_; }

 private:
  std::vector<Bytes> handle(const Bytes& message, std::uint64_t conn_id);

  DeviceProfile profile_;
  std::unique_ptr<ProfileLogic> logic_;
  mutable std::mutex core_mutex_;
  mutable DeviceCore core_;
  AppCore app_;
  mutable std::mutex control_mutex_;
  DeviceServer server_;
};

std::unique_ptr<SimDevice> spawn_device(const DeviceProfile& profile);

/// A device that answers each known request with a fixed list of responses
/// and ignores everything else. Used to script exact exchanges in tests.
class ScriptedDevice {
 public:
  ScriptedDevice(capture::Transport transport, std::map<Bytes, std::vector<Bytes>> replies,
                 Endpoint bind = Endpoint("127.0.0.1", 0));

  Endpoint endpoint() const { return server_.endpoint(); }
  std::uint64_t messages_handled() const { return server_.messages_handled(); }
  /// Every message received so far, in order.
  std::vector<Bytes> received() const;

 private:
  std::map<Bytes, std::vector<Bytes>> replies_;
  mutable std::mutex mutex_;
  std::vector<Bytes> received_;
  DeviceServer server_;
};

}  // namespace replaykit::sim
