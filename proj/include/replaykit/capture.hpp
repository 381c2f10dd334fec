#pragma once

// Capture ingestion: classic pcap parsing, app/device direction labelling and
// request/response flow segmentation.

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "replaykit/bytes.hpp"
#include "replaykit/endpoint.hpp"

namespace replaykit::capture {

enum class Transport { Tcp, Udp };

std::string_view to_string(Transport t);
Transport transport_from_string(std::string_view s);

/// One transport-layer payload. Headers are stripped; payload is never empty.
struct PacketRecord {
  std::int64_t timestamp_us = 0;  // relative to the capture epoch
  Endpoint src;
  Endpoint dst;
  Transport transport = Transport::Tcp;
  Bytes payload;

  bool operator==(const PacketRecord&) const = default;
};

enum class TransportFilter { Tcp, Udp, Both };

/// Port 0 in either endpoint matches any port on that address; companion
/// apps usually open each TCP connection from a fresh ephemeral port.
struct SessionConfig {
  Endpoint app;
  Endpoint device;
  TransportFilter transport = TransportFilter::Both;

  /// Throws ParameterError when app == device.
  void validate() const;
};

enum class Direction { Request, Response, Unrelated };

std::string_view to_string(Direction d);

/// Consecutive app->device requests followed by consecutive device->app responses.
struct Flow {
  std::vector<PacketRecord> requests;
  std::vector<PacketRecord> responses;

  Transport transport() const { return requests.front().transport; }
  bool operator==(const Flow&) const = default;
};

/// One link-layer frame as stored in a capture.
struct Frame {
  std::int64_t timestamp_us = 0;  // absolute
  Bytes data;
};

/// Pull-based frame iterator owned by a single consumer. Implemented for pcap
/// byte streams and for live interfaces (see live_source.hpp).
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<Frame> next() = 0;
};

/// Reads frames out of an in-memory classic pcap file. The global header is
/// validated on construction.
class PcapFrameSource final : public FrameSource {
 public:
  explicit PcapFrameSource(ByteView capture);

  std::optional<Frame> next() override;

 private:
  ByteView data_;
  std::size_t offset_ = 24;
  bool swapped_ = false;
};

struct ParseResult {
  std::vector<PacketRecord> records;
  /// Set when payloads of two or more TCP connections between the same
  /// endpoint pair interleave in time. They are still merged.
  bool interleaved_connections = false;
  std::size_t frames_seen = 0;
  std::size_t duplicates_dropped = 0;
};

ParseResult parse_frames(FrameSource& source, const SessionConfig& config);

/// Parses a classic pcap byte stream (Ethernet link type) and returns the
/// app<->device payload records in timestamp order.
std::vector<PacketRecord> parse_capture(ByteView capture, const SessionConfig& config);

ParseResult parse_capture_detailed(ByteView capture, const SessionConfig& config);

/// Address equality plus port equality unless the pattern's port is 0.
bool endpoint_matches(const Endpoint& pattern, const Endpoint& actual);

Direction classify_direction(const PacketRecord& record, const SessionConfig& config);

std::vector<Flow> segment_flows(const std::vector<PacketRecord>& records,
                                const SessionConfig& config);

bool check_local_connectivity(const std::vector<PacketRecord>& records);

}  // namespace replaykit::capture
