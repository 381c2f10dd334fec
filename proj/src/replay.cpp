#include "replaykit/replay.hpp"

#include <netinet/in.h>
#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include "replaykit/errors.hpp"
#include "replaykit/net.hpp"

namespace replaykit::replay {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t micros_since(Clock::time_point origin) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - origin).count();
}

net::UniqueFd open_udp(const Endpoint& device, std::string& error) {
  net::UniqueFd fd(::socket(net::family_of(device), SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
  if (!fd) {
    error = std::strerror(errno);
    return fd;
  }
  // connected UDP socket: one ephemeral source port, datagrams from the device only
  auto sa = net::to_sockaddr(device);
  if (::connect(fd.get(), sa.get(), sa.length) != 0) {
    error = std::strerror(errno);
    fd.reset();
  }
  return fd;
}

}  // namespace

void ReplayConfig::validate() const {
  for (auto d : {per_flow_response_timeout, inter_request_delay, inter_flow_delay, connect_timeout}) {
    if (d.count() <= 0) throw ParameterError("replay durations must be positive");
  }
}

std::vector<capture::Flow> schedule(std::vector<capture::Flow> flows) {
  std::reverse(flows.begin(), flows.end());
  return flows;
}

FlowReplayResult replay_flow(const capture::Flow& flow, const Endpoint& device,
                             capture::Transport transport, const ReplayConfig& config,
                             Clock::time_point origin) {
  FlowReplayResult result;
  for (const auto& r : flow.requests) result.request_lengths.push_back(r.payload.size());

  std::string error;
  net::UniqueFd fd;
  if (transport == capture::Transport::Tcp) {
    auto connected = net::connect_tcp(device, config.connect_timeout, error);
    if (!connected) {
      result.notes.push_back("connect to " + device.to_string() + " failed: " + error);
      return result;
    }
    fd = std::move(*connected);
  } else {
    fd = open_udp(device, error);
    if (!fd) {
      result.notes.push_back("udp socket failed: " + error);
      return result;
    }
  }

  std::atomic<bool> writer_done{false};
  std::atomic<std::int64_t> last_activity_us{micros_since(origin)};
  std::mutex notes_mutex;

  // Writer: requests go out on a fixed cadence without waiting for replies.
  std::jthread writer([&] {
    for (std::size_t i = 0; i < flow.requests.size(); ++i) {
      if (i > 0) std::this_thread::sleep_for(config.inter_request_delay);
      const auto& payload = flow.requests[i].payload;
      bool ok;
      if (transport == capture::Transport::Tcp) {
        ok = net::send_all(fd.get(), payload, config.connect_timeout);
      } else {
        ok = ::send(fd.get(), payload.data(), payload.size(), MSG_NOSIGNAL) ==
             static_cast<ssize_t>(payload.size());
      }
      last_activity_us = micros_since(origin);
      if (!ok) {
        std::lock_guard lock(notes_mutex);
        result.notes.push_back("send of request " + std::to_string(i) + " failed: " +
                               std::strerror(errno));
        break;
      }
    }
    writer_done = true;
  });

  // Reader: owns response ordering; stops once the writer is done and the
  // line has been quiet for the response timeout.
  const auto timeout_us =
      std::chrono::duration_cast<std::chrono::microseconds>(config.per_flow_response_timeout)
          .count();
  Bytes buffer(65536);
  bool peer_closed = false;
  while (!peer_closed) {
    std::int64_t now = micros_since(origin);
    std::int64_t deadline = last_activity_us.load() + timeout_us;
    if (writer_done && now >= deadline) break;
    auto wait = std::chrono::milliseconds(
        writer_done ? std::max<std::int64_t>(1, (deadline - now + 999) / 1000) : 10);
    if (!net::wait_readable(fd.get(), wait)) continue;

    ssize_t n = ::recv(fd.get(), buffer.data(), buffer.size(), 0);
    if (n > 0) {
      std::int64_t at = micros_since(origin);
      result.responses.push_back({at, Bytes(buffer.begin(), buffer.begin() + n)});
      last_activity_us = at;
    } else if (n == 0) {
      peer_closed = true;
      std::lock_guard lock(notes_mutex);
      result.notes.push_back("device closed the connection");
    } else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
      std::lock_guard lock(notes_mutex);
      result.notes.push_back(std::string("receive failed: ") + std::strerror(errno));
      if (transport == capture::Transport::Tcp) peer_closed = true;
    }
  }
  writer.join();
  return result;
}

AttackResult run_attack(const std::vector<capture::Flow>& flows, const Endpoint& device,
                        const ReplayConfig& config) {
  config.validate();
  AttackResult attack;
  const auto origin = Clock::now();

  // Index by original position, then replay in stack order.
  std::vector<std::size_t> order(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) order[i] = flows.size() - 1 - i;

  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos > 0) std::this_thread::sleep_for(config.inter_flow_delay);
    const auto& flow = flows[order[pos]];
    TranscriptEntry entry;
    entry.scheduled_position = pos;
    entry.flow_index = order[pos];
    if (flow.requests.empty()) {
      entry.notes.push_back("flow has no requests");
      attack.transcript.push_back(std::move(entry));
      continue;
    }
    entry.transport = flow.transport();
    auto result = replay_flow(flow, device, entry.transport, config, origin);
    entry.request_lengths = std::move(result.request_lengths);
    entry.response_count = result.responses.size();
    entry.notes = std::move(result.notes);
    for (auto& r : result.responses) {
      attack.queue.entries.push_back({r.timestamp_us, order[pos], std::move(r.payload)});
    }
    attack.transcript.push_back(std::move(entry));
  }

  // Flows run one after another, so this only reorders simultaneous arrivals
  // (by scheduled position, which the insertion order already reflects).
  std::stable_sort(attack.queue.entries.begin(), attack.queue.entries.end(),
                   [](const QueueEntry& a, const QueueEntry& b) { return a.arrival_us < b.arrival_us; });
  return attack;
}

}  // namespace replaykit::replay
