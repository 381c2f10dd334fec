#pragma once

// Live capture from a network interface (Linux AF_PACKET, needs CAP_NET_RAW).

#include <chrono>
#include <string>

#include "replaykit/capture.hpp"
#include "replaykit/net.hpp"

namespace replaykit::capture {

class LiveFrameSource final : public FrameSource {
 public:
  /// Opens `interface` in promiscuous mode; next() returns frames until
  /// `duration` has elapsed. Throws Error when the socket cannot be opened.
  LiveFrameSource(const std::string& interface, std::chrono::milliseconds duration);

  std::optional<Frame> next() override;

 private:
  net::UniqueFd fd_;
  std::chrono::steady_clock::time_point deadline_;
};

}  // namespace replaykit::capture
