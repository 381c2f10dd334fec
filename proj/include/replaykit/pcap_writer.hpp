#pragma once

#include <cstdint>

#include "replaykit/bytes.hpp"
#include "replaykit/endpoint.hpp"

namespace replaykit {

namespace tcp_flags {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
}  // namespace tcp_flags

/// Serializes synthetic Ethernet frames into a classic (microsecond) pcap
/// byte stream, little-endian, link type Ethernet.
class PcapWriter {
 public:
  PcapWriter();

  void add_udp(std::int64_t timestamp_us, const Endpoint& src, const Endpoint& dst,
               ByteView payload);

  void add_tcp(std::int64_t timestamp_us, const Endpoint& src, const Endpoint& dst,
               std::uint32_t seq, std::uint32_t ack, std::uint8_t flags, ByteView payload = {});

  /// Appends an already-built link-layer frame.
  void add_frame(std::int64_t timestamp_us, ByteView frame);

  const Bytes& bytes() const noexcept { return out_; }
  std::size_t frame_count() const noexcept { return frames_; }

 private:
  Bytes out_;
  std::size_t frames_ = 0;
};

/// Builds an Ethernet/IP/transport frame. Both endpoints must share an address family.
Bytes build_frame(const Endpoint& src, const Endpoint& dst, std::uint8_t ip_proto,
                  ByteView l4_segment);

/// Tracks sequence numbers for one synthetic TCP connection so the harness can
/// emit a plausible handshake, data segments with bare ACKs, and teardown.
class TcpStreamWriter {
 public:
  TcpStreamWriter(PcapWriter& writer, Endpoint client, Endpoint server, std::uint32_t client_isn,
                  std::uint32_t server_isn);

  void open(std::int64_t& clock_us, std::int64_t tick_us);
  void send(bool from_client, ByteView payload, std::int64_t& clock_us, std::int64_t tick_us);
  void close(std::int64_t& clock_us, std::int64_t tick_us);

 private:
  PcapWriter& writer_;
  Endpoint client_;
  Endpoint server_;
  std::uint32_t client_seq_;
  std::uint32_t server_seq_;
};

}  // namespace replaykit
