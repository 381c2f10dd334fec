#include "replaykit/live_source.hpp"

#include <arpa/inet.h>
#include <linux/if_packet.h>
#include <net/ethernet.h>
#include <net/if.h>
#include <sys/socket.h>

#include <cerrno>
#include <cstring>

#include "replaykit/errors.hpp"

namespace replaykit::capture {

LiveFrameSource::LiveFrameSource(const std::string& interface, std::chrono::milliseconds duration)
    : fd_(::socket(AF_PACKET, SOCK_RAW | SOCK_CLOEXEC, htons(ETH_P_ALL))),
      deadline_(std::chrono::steady_clock::now() + duration) {
  if (!fd_) throw Error(std::string("cannot open packet socket: ") + std::strerror(errno));
  unsigned index = ::if_nametoindex(interface.c_str());
  if (index == 0) throw Error("no such interface '" + interface + "'");

  sockaddr_ll addr{};
  addr.sll_family = AF_PACKET;
  addr.sll_protocol = htons(ETH_P_ALL);
  addr.sll_ifindex = static_cast<int>(index);
  if (::bind(fd_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw Error("cannot bind to '" + interface + "': " + std::strerror(errno));
  }
  packet_mreq mreq{};
  mreq.mr_ifindex = static_cast<int>(index);
  mreq.mr_type = PACKET_MR_PROMISC;
  ::setsockopt(fd_.get(), SOL_PACKET, PACKET_ADD_MEMBERSHIP, &mreq, sizeof(mreq));
}

std::optional<Frame> LiveFrameSource::next() {
  Bytes buf(65536);
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline_ - std::chrono::steady_clock::now());
    if (left.count() <= 0 || !net::wait_readable(fd_.get(), left)) return std::nullopt;
    ssize_t n = ::recv(fd_.get(), buf.data(), buf.size(), 0);
    if (n <= 0) continue;
    auto now = std::chrono::system_clock::now().time_since_epoch();
    buf.resize(static_cast<std::size_t>(n));
    return Frame{std::chrono::duration_cast<std::chrono::microseconds>(now).count(), std::move(buf)};
  }
}

}  // namespace replaykit::capture
