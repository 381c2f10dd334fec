#pragma once

#include <random>
#include <string>
#include <vector>

#include "replaykit/capture.hpp"

namespace fixtures {

using replaykit::Bytes;
using replaykit::Endpoint;
using replaykit::capture::PacketRecord;
using replaykit::capture::SessionConfig;
using replaykit::capture::Transport;

inline const Endpoint kApp{"192.168.1.50", 50123};
inline const Endpoint kDevice{"192.168.1.80", 8080};
inline const Endpoint kCloud{"52.4.10.7", 443};

inline SessionConfig session() { return SessionConfig{kApp, kDevice}; }

inline PacketRecord request(std::int64_t ts, const std::string& payload,
                            Transport t = Transport::Tcp) {
  return PacketRecord{ts, kApp, kDevice, t, Bytes(payload.begin(), payload.end())};
}

inline PacketRecord response(std::int64_t ts, const std::string& payload,
                             Transport t = Transport::Tcp) {
  return PacketRecord{ts, kDevice, kApp, t, Bytes(payload.begin(), payload.end())};
}

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng() & 0xFF);
  return out;
}

}  // namespace fixtures
