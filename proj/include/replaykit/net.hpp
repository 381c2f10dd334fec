#pragma once

#include <sys/socket.h>

#include <chrono>
#include <optional>
#include <utility>

#include "replaykit/bytes.hpp"
#include "replaykit/endpoint.hpp"

namespace replaykit::net {

/// Owning file descriptor.
class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) noexcept : fd_(fd) {}
  UniqueFd(UniqueFd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& o) noexcept {
    if (this != &o) reset(std::exchange(o.fd_, -1));
    return *this;
  }
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;
  ~UniqueFd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset(int fd = -1) noexcept;

 private:
  int fd_ = -1;
};

struct SockAddr {
  sockaddr_storage storage{};
  socklen_t length = 0;
  const sockaddr* get() const { return reinterpret_cast<const sockaddr*>(&storage); }
};

SockAddr to_sockaddr(const Endpoint& ep);
Endpoint from_sockaddr(const sockaddr_storage& ss);
int family_of(const Endpoint& ep);

/// Local address a socket is bound to.
Endpoint local_endpoint(int fd);

/// Non-blocking connect bounded by `timeout`. Returns the connected socket or
/// nothing, with errno-derived text in `error`.
std::optional<UniqueFd> connect_tcp(const Endpoint& peer, std::chrono::milliseconds timeout,
                                    std::string& error);

/// Writes the whole buffer, polling on EAGAIN. MSG_NOSIGNAL is used so a
/// closed peer yields false instead of SIGPIPE.
bool send_all(int fd, ByteView data, std::chrono::milliseconds timeout);

/// Waits for readability. Returns false on timeout.
bool wait_readable(int fd, std::chrono::milliseconds timeout);

}  // namespace replaykit::net
