#include "replaykit/sim/device.hpp"

#include <netinet/in.h>
#include <poll.h>
#include <sys/eventfd.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <random>

#include "profile_logic.hpp"
#include "replaykit/sim/keyed.hpp"

namespace replaykit::sim {

namespace {

constexpr std::size_t kMaxMessage = 65536;

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

DeviceServer::DeviceServer(capture::Transport transport, Endpoint bind, Handler handler)
    : transport_(transport), bind_(std::move(bind)), handler_(std::move(handler)) {}

DeviceServer::~DeviceServer() { stop(); }

void DeviceServer::start() {
  if (thread_.joinable()) return;
  bool tcp = transport_ == capture::Transport::Tcp;
  net::UniqueFd fd(::socket(net::family_of(bind_), (tcp ? SOCK_STREAM : SOCK_DGRAM) | SOCK_CLOEXEC, 0));
  if (!fd) throw SpawnError(errno_text("socket"));
  if (tcp) {
    int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  }
  auto addr = net::to_sockaddr(bind_);
  if (::bind(fd.get(), addr.get(), addr.length) != 0) {
    throw SpawnError(errno_text(("bind " + bind_.to_string()).c_str()));
  }
  if (tcp && ::listen(fd.get(), 16) != 0) throw SpawnError(errno_text("listen"));
  bind_ = net::local_endpoint(fd.get());

  net::UniqueFd ev(::eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK));
  if (!ev) throw SpawnError(errno_text("eventfd"));
  socket_ = std::move(fd);
  stop_event_ = std::move(ev);
  thread_ = std::thread([this, tcp] { tcp ? run_tcp() : run_udp(); });
}

void DeviceServer::stop() {
  if (!thread_.joinable()) return;
  std::uint64_t one = 1;
  [[maybe_unused]] auto n = ::write(stop_event_.get(), &one, sizeof(one));
  thread_.join();
  socket_.reset();
  stop_event_.reset();
}

Endpoint DeviceServer::endpoint() const { return bind_; }

std::uint64_t DeviceServer::messages_handled() const {
  std::lock_guard lock(mutex_);
  return handled_;
}

bool DeviceServer::wait_handled(std::uint64_t target, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  return handled_cv_.wait_for(lock, timeout, [&] { return handled_ >= target; });
}

void DeviceServer::finish_message() {
  {
    std::lock_guard lock(mutex_);
    ++handled_;
  }
  handled_cv_.notify_all();
}

void DeviceServer::run_tcp() {
  struct Conn {
    net::UniqueFd fd;
    std::uint64_t id;
  };
  std::vector<Conn> conns;
  Bytes buf(kMaxMessage);

  for (;;) {
    std::vector<pollfd> fds;
    fds.push_back({stop_event_.get(), POLLIN, 0});
    fds.push_back({socket_.get(), POLLIN, 0});
    for (auto& c : conns) fds.push_back({c.fd.get(), POLLIN, 0});
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (fds[0].revents) return;

    if (fds[1].revents & POLLIN) {
      int c = ::accept4(socket_.get(), nullptr, nullptr, SOCK_CLOEXEC);
      if (c >= 0) conns.push_back({net::UniqueFd(c), next_conn_++});
    }

    std::vector<std::uint64_t> closed;
    for (std::size_t i = 2; i < fds.size(); ++i) {
      if (!fds[i].revents) continue;
      Conn& conn = conns[i - 2];
      ssize_t n = ::recv(conn.fd.get(), buf.data(), buf.size(), 0);
      if (n <= 0) {
        closed.push_back(conn.id);
        continue;
      }
      auto replies = handler_(Bytes(buf.begin(), buf.begin() + n), conn.id);
      for (std::size_t r = 0; r < replies.size(); ++r) {
        if (r > 0) std::this_thread::sleep_for(kResponseGap);
        if (!net::send_all(conn.fd.get(), replies[r], std::chrono::milliseconds(1000))) break;
      }
      finish_message();
    }
    std::erase_if(conns, [&](const Conn& c) {
      return std::find(closed.begin(), closed.end(), c.id) != closed.end();
    });
  }
}

void DeviceServer::run_udp() {
  std::map<Endpoint, std::uint64_t> peers;
  Bytes buf(kMaxMessage);
  for (;;) {
    pollfd fds[2] = {{stop_event_.get(), POLLIN, 0}, {socket_.get(), POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (fds[0].revents) return;
    if (!(fds[1].revents & POLLIN)) continue;

    sockaddr_storage from{};
    socklen_t from_len = sizeof(from);
    ssize_t n = ::recvfrom(socket_.get(), buf.data(), buf.size(), 0,
                           reinterpret_cast<sockaddr*>(&from), &from_len);
    if (n < 0) continue;
    Endpoint peer = net::from_sockaddr(from);
    auto [it, inserted] = peers.try_emplace(peer, next_conn_);
    if (inserted) ++next_conn_;
    auto replies = handler_(Bytes(buf.begin(), buf.begin() + n), it->second);
    for (std::size_t r = 0; r < replies.size(); ++r) {
      if (r > 0) std::this_thread::sleep_for(kResponseGap);
      ::sendto(socket_.get(), replies[r].data(), replies[r].size(), 0,
               reinterpret_cast<const sockaddr*>(&from), from_len);
    }
    finish_message();
  }
}

Bytes DeviceCore::random_bytes(std::size_t n) {
  Bytes out;
  while (out.size() < n) {
    std::uint64_t v = splitmix64(rng_state);
    for (int i = 0; i < 8 && out.size() < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  return out;
}

Bytes AppCore::random_bytes(std::size_t n) {
  Bytes out;
  while (out.size() < n) {
    std::uint64_t v = splitmix64(rng_state);
    for (int i = 0; i < 8 && out.size() < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  return out;
}

SimDevice::SimDevice(DeviceProfile profile)
    : profile_(std::move(profile)),
      logic_(make_logic(profile_)),
      server_(profile_.transport, Endpoint(profile_.bind_address, profile_.port),
              [this](const Bytes& m, std::uint64_t id) { return handle(m, id); }) {
  std::uint64_t seed;
  if (profile_.seed) {
    seed = *profile_.seed;
  } else {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  core_.rng_state = seed;
  core_.secret = core_.random_bytes(16);
  logic_->on_boot(core_, true);
  app_.rng_state = seed ^ 0xA5A5A5A5A5A5A5A5ULL;
  server_.start();
}

SimDevice::~SimDevice() { server_.stop(); }

DeviceState SimDevice::query_state() const {
  std::lock_guard lock(core_mutex_);
  return core_.state;
}

void SimDevice::restart() {
  std::lock_guard control(control_mutex_);
  server_.stop();
  {
    std::lock_guard lock(core_mutex_);
    core_.connections.clear();
    core_.state = DeviceState::Reverse;
    ++core_.boots;
    logic_->on_boot(core_, profile_.rekey_on_restart);
  }
  server_.start();
}

std::vector<Bytes> SimDevice::handle(const Bytes& message, std::uint64_t conn_id) {
  std::lock_guard lock(core_mutex_);
  ++core_.clock_s;
  return logic_->on_message(message, core_.connections[conn_id], core_);
}

#ifdef REPLAYKIT_TEST_HOOKS
Bytes SimDevice::session_key_for_test() const {
  std::lock_guard lock(core_mutex_);
  return core_.session_key;
}
#endif

std::unique_ptr<SimDevice> spawn_device(const DeviceProfile& profile) {
  return std::make_unique<SimDevice>(profile);
}

ScriptedDevice::ScriptedDevice(capture::Transport transport,
                               std::map<Bytes, std::vector<Bytes>> replies, Endpoint bind)
    : replies_(std::move(replies)),
      server_(transport, std::move(bind), [this](const Bytes& m, std::uint64_t) {
        std::lock_guard lock(mutex_);
        received_.push_back(m);
        auto it = replies_.find(m);
        return it == replies_.end() ? std::vector<Bytes>{} : it->second;
      }) {
  server_.start();
}

std::vector<Bytes> ScriptedDevice::received() const {
  std::lock_guard lock(mutex_);
  return received_;
}

}  // namespace replaykit::sim
