#include "replaykit/sim/companion.hpp"

#include <sys/socket.h>

#include <optional>

#include "profile_logic.hpp"
#include "replaykit/pcap_writer.hpp"
#include "replaykit/sim/keyed.hpp"

namespace replaykit::sim {

namespace {

using std::chrono::milliseconds;
constexpr milliseconds kDeviceTimeout{2000};

struct Recorder {
  PcapWriter& writer;
  std::int64_t clock_us;
  std::vector<capture::PacketRecord>& log;
};

class Channel final : public AppChannel {
 public:
  Channel(SimDevice& device, Endpoint app, Recorder& rec)
      : device_(device), transport_(device.profile().transport), app_(std::move(app)),
        device_ep_(device.endpoint()), rec_(rec) {
    if (transport_ == capture::Transport::Tcp) {
      std::string error;
      auto fd = net::connect_tcp(device_ep_, milliseconds(1000), error);
      if (!fd) throw TriggerError("cannot reach device " + device_ep_.to_string() + ": " + error);
      fd_ = std::move(*fd);
      auto isn = static_cast<std::uint32_t>(splitmix64(device.app().rng_state));
      stream_.emplace(rec_.writer, app_, device_ep_, isn, isn ^ 0x5F3759DFu);
      stream_->open(rec_.clock_us, kFrameTickUs);
    } else {
      fd_ = net::UniqueFd(::socket(net::family_of(device_ep_), SOCK_DGRAM | SOCK_CLOEXEC, 0));
      auto addr = net::to_sockaddr(device_ep_);
      if (!fd_ || ::connect(fd_.get(), addr.get(), addr.length) != 0) {
        throw TriggerError("cannot reach device " + device_ep_.to_string());
      }
    }
  }

  ~Channel() override {
    if (stream_) stream_->close(rec_.clock_us, kFrameTickUs);
  }

  std::vector<Bytes> exchange(const Bytes& message, std::size_t expected) override {
    std::uint64_t before = device_.messages_handled();
    if (!net::send_all(fd_.get(), message, kDeviceTimeout)) throw TriggerError("send to device failed");
    record(true, message);
    if (!device_.wait_handled(before + 1, kDeviceTimeout)) throw TriggerError("device did not process the command");

    std::vector<Bytes> replies;
    Bytes buf(65536);
    while (replies.size() < expected) {
      if (!net::wait_readable(fd_.get(), kDeviceTimeout)) throw TriggerError("device did not answer");
      ssize_t n = ::recv(fd_.get(), buf.data(), buf.size(), 0);
      if (n <= 0) throw TriggerError("device closed the connection");
      replies.emplace_back(buf.begin(), buf.begin() + n);
      record(false, replies.back());
    }
    return replies;
  }

 private:
  void record(bool from_app, const Bytes& payload) {
    const Endpoint& src = from_app ? app_ : device_ep_;
    const Endpoint& dst = from_app ? device_ep_ : app_;
    rec_.log.push_back({rec_.clock_us, src, dst, transport_, payload});
    if (stream_) {
      stream_->send(from_app, payload, rec_.clock_us, kFrameTickUs);
    } else {
      rec_.writer.add_udp(rec_.clock_us, src, dst, payload);
      rec_.clock_us += kFrameTickUs;
    }
  }

  SimDevice& device_;
  capture::Transport transport_;
  Endpoint app_;
  Endpoint device_ep_;
  Recorder& rec_;
  net::UniqueFd fd_;
  std::optional<TcpStreamWriter> stream_;
};

void run_command(SimDevice& device, DeviceState target, const Endpoint& app, Recorder& rec) {
  std::lock_guard control(device.control_mutex());
  AppCore& core = device.app();
  Endpoint source = app;
  if (app.port() == 0) {
    source = Endpoint(app.address(), core.next_port);
    core.next_port = core.next_port == 65535 ? 49152 : core.next_port + 1;
  }
  AppContext ctx{core, {}, {}, static_cast<std::uint64_t>(rec.clock_us / 1'000'000)};
  device.with_core([&](DeviceCore& c) {
    ctx.secret = c.secret;
    ctx.session_key = c.session_key;
    return 0;
  });
  {
    Channel channel(device, source, rec);
    device.logic().run_command(target, channel, ctx);
  }
  if (device.query_state() != target) {
    throw TriggerError("device did not reach " + std::string(to_string(target)));
  }
  rec.clock_us += kCommandGapUs;
}

}  // namespace

std::vector<DeviceState> default_training_script() {
  std::vector<DeviceState> s;
  for (int i = 0; i < 5; ++i) {
    s.push_back(DeviceState::Obverse);
    s.push_back(DeviceState::Reverse);
  }
  return s;
}

std::vector<capture::PacketRecord> trigger_state(SimDevice& device, DeviceState target,
                                                 const Endpoint& app) {
  PcapWriter writer;
  std::vector<capture::PacketRecord> log;
  Recorder rec{writer, kCaptureBaseUs, log};
  run_command(device, target, app, rec);
  for (auto& r : log) r.timestamp_us -= kCaptureBaseUs;
  return log;
}

CompanionCapture record_session(SimDevice& device, const Endpoint& app,
                                const std::vector<DeviceState>& script) {
  PcapWriter writer;
  CompanionCapture out;
  Recorder rec{writer, kCaptureBaseUs, out.log};
  for (auto target : script) run_command(device, target, app, rec);
  for (auto& r : out.log) r.timestamp_us -= kCaptureBaseUs;
  out.pcap = writer.bytes();
  return out;
}

Bytes companion_session(SimDevice& device, const Endpoint& app, const std::vector<DeviceState>& script) {
  return record_session(device, app, script).pcap;
}

}  // namespace replaykit::sim
