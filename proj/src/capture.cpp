#include "replaykit/capture.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "replaykit/errors.hpp"

namespace replaykit::capture {

namespace {

constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
constexpr std::uint32_t kPcapMagicSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kPcapNanoMagic = 0xa1b23c4d;
constexpr std::uint32_t kPcapNanoMagicSwapped = 0x4d3cb2a1;
constexpr std::uint32_t kPcapngMagic = 0x0a0d0d0a;
constexpr std::uint32_t kLinkTypeEthernet = 1;
constexpr std::size_t kGlobalHeaderSize = 24;
constexpr std::size_t kRecordHeaderSize = 16;
constexpr std::uint32_t kMaxFrameSize = 256 * 1024 * 1024;

constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
constexpr std::uint16_t kEtherTypeIpv6 = 0x86DD;
constexpr std::uint16_t kEtherTypeVlan = 0x8100;
constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;

std::uint32_t read_le32(ByteView b, std::size_t off) {
  return std::uint32_t(b[off]) | (std::uint32_t(b[off + 1]) << 8) |
         (std::uint32_t(b[off + 2]) << 16) | (std::uint32_t(b[off + 3]) << 24);
}

std::uint32_t bswap32(std::uint32_t v) {
  return ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
}

std::uint16_t read_be16(ByteView b, std::size_t off) {
  return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}

std::uint32_t read_be32(ByteView b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

std::string format_address(int family, const std::uint8_t* raw) {
  char buf[INET6_ADDRSTRLEN] = {};
  inet_ntop(family, raw, buf, sizeof(buf));
  return buf;
}

struct DecodedPacket {
  Endpoint src;
  Endpoint dst;
  Transport transport;
  std::uint32_t tcp_seq = 0;
  Bytes payload;
};

// Decodes Ethernet -> IPv4/IPv6 -> TCP/UDP. Returns nothing for frames that
// carry something else or are truncated below the transport header.
std::optional<DecodedPacket> decode_ethernet(ByteView frame) {
  std::size_t off = 12;
  if (frame.size() < 14) return std::nullopt;
  std::uint16_t ether_type = read_be16(frame, off);
  off += 2;
  while (ether_type == kEtherTypeVlan) {
    if (frame.size() < off + 4) return std::nullopt;
    ether_type = read_be16(frame, off + 2);
    off += 4;
  }

  std::string src_addr;
  std::string dst_addr;
  std::uint8_t proto = 0;
  std::size_t l4_end = 0;
  if (ether_type == kEtherTypeIpv4) {
    if (frame.size() < off + 20) return std::nullopt;
    std::uint8_t version = frame[off] >> 4;
    std::size_t ihl = std::size_t(frame[off] & 0x0F) * 4;
    if (version != 4 || ihl < 20 || frame.size() < off + ihl) return std::nullopt;
    std::uint16_t total_length = read_be16(frame, off + 2);
    std::uint16_t frag = read_be16(frame, off + 6);
    // fragments are not reassembled
    if ((frag & 0x1FFF) != 0 || (frag & 0x2000) != 0) return std::nullopt;
    proto = frame[off + 9];
    src_addr = format_address(AF_INET, frame.data() + off + 12);
    dst_addr = format_address(AF_INET, frame.data() + off + 16);
    l4_end = std::min<std::size_t>(frame.size(), off + total_length);
    off += ihl;
  } else if (ether_type == kEtherTypeIpv6) {
    if (frame.size() < off + 40) return std::nullopt;
    if ((frame[off] >> 4) != 6) return std::nullopt;
    std::uint16_t payload_length = read_be16(frame, off + 4);
    proto = frame[off + 6];
    src_addr = format_address(AF_INET6, frame.data() + off + 8);
    dst_addr = format_address(AF_INET6, frame.data() + off + 24);
    off += 40;
    l4_end = std::min<std::size_t>(frame.size(), off + payload_length);
  } else {
    return std::nullopt;
  }

  DecodedPacket pkt;
  if (proto == kProtoTcp) {
    if (l4_end < off + 20) return std::nullopt;
    std::size_t data_offset = std::size_t(frame[off + 12] >> 4) * 4;
    if (data_offset < 20 || l4_end < off + data_offset) return std::nullopt;
    pkt.transport = Transport::Tcp;
    pkt.src = Endpoint(src_addr, read_be16(frame, off));
    pkt.dst = Endpoint(dst_addr, read_be16(frame, off + 2));
    pkt.tcp_seq = read_be32(frame, off + 4);
    pkt.payload.assign(frame.begin() + off + data_offset, frame.begin() + l4_end);
  } else if (proto == kProtoUdp) {
    if (l4_end < off + 8) return std::nullopt;
    std::uint16_t udp_length = read_be16(frame, off + 4);
    std::size_t end = std::min<std::size_t>(l4_end, off + std::max<std::uint16_t>(udp_length, 8));
    pkt.transport = Transport::Udp;
    pkt.src = Endpoint(src_addr, read_be16(frame, off));
    pkt.dst = Endpoint(dst_addr, read_be16(frame, off + 2));
    pkt.payload.assign(frame.begin() + off + 8, frame.begin() + end);
  } else {
    return std::nullopt;
  }
  return pkt;
}

bool transport_allowed(Transport t, TransportFilter filter) {
  switch (filter) {
    case TransportFilter::Both: return true;
    case TransportFilter::Tcp: return t == Transport::Tcp;
    case TransportFilter::Udp: return t == Transport::Udp;
  }
  return false;
}

}  // namespace

std::string_view to_string(Transport t) { return t == Transport::Tcp ? "tcp" : "udp"; }

Transport transport_from_string(std::string_view s) {
  if (s == "tcp" || s == "TCP") return Transport::Tcp;
  if (s == "udp" || s == "UDP") return Transport::Udp;
  throw ParameterError("unknown transport '" + std::string(s) + "'");
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Request: return "request";
    case Direction::Response: return "response";
    case Direction::Unrelated: return "unrelated";
  }
  return "unrelated";
}

void SessionConfig::validate() const {
  if (app == device) throw ParameterError("app and device endpoints must differ");
}

PcapFrameSource::PcapFrameSource(ByteView capture) : data_(capture) {
  if (data_.size() < kGlobalHeaderSize) {
    throw ParseError("truncated pcap global header", data_.size());
  }
  std::uint32_t magic = read_le32(data_, 0);
  if (magic == kPcapMagic) {
    swapped_ = false;
  } else if (magic == kPcapMagicSwapped) {
    swapped_ = true;
  } else if (magic == kPcapNanoMagic || magic == kPcapNanoMagicSwapped) {
    throw UnsupportedFormatError("nanosecond-resolution pcap is not supported");
  } else if (magic == kPcapngMagic) {
    throw UnsupportedFormatError("pcapng captures are not supported; convert to classic pcap");
  } else {
    throw ParseError("bad pcap magic number", 0);
  }
  auto rd32 = [&](std::size_t off) {
    std::uint32_t v = read_le32(data_, off);
    return swapped_ ? bswap32(v) : v;
  };
  std::uint32_t version = rd32(4);
  std::uint16_t major = swapped_ ? static_cast<std::uint16_t>((data_[4] << 8) | data_[5])
                                 : static_cast<std::uint16_t>(version & 0xFFFF);
  if (major != 2) throw ParseError("unsupported pcap major version " + std::to_string(major), 4);
  std::uint32_t link_type = rd32(20) & 0x0FFFFFFF;
  if (link_type != kLinkTypeEthernet) {
    throw UnsupportedFormatError("unsupported pcap link type " + std::to_string(link_type) +
                                 " (only Ethernet is read)");
  }
}

std::optional<Frame> PcapFrameSource::next() {
  if (offset_ == data_.size()) return std::nullopt;
  if (data_.size() - offset_ < kRecordHeaderSize) {
    throw ParseError("truncated pcap record header", offset_);
  }
  auto rd32 = [&](std::size_t off) {
    std::uint32_t v = read_le32(data_, off);
    return swapped_ ? bswap32(v) : v;
  };
  std::uint32_t ts_sec = rd32(offset_);
  std::uint32_t ts_usec = rd32(offset_ + 4);
  std::uint32_t incl_len = rd32(offset_ + 8);
  if (ts_usec >= 1'000'000) throw ParseError("pcap record microseconds out of range", offset_ + 4);
  if (incl_len > kMaxFrameSize) throw ParseError("pcap record length too large", offset_ + 8);
  std::size_t body = offset_ + kRecordHeaderSize;
  if (data_.size() - body < incl_len) throw ParseError("truncated pcap record body", body);

  Frame frame;
  frame.timestamp_us = std::int64_t(ts_sec) * 1'000'000 + ts_usec;
  frame.data.assign(data_.begin() + body, data_.begin() + body + incl_len);
  offset_ = body + incl_len;
  return frame;
}

ParseResult parse_frames(FrameSource& source, const SessionConfig& config) {
  ParseResult result;
  std::optional<std::int64_t> epoch;
  std::set<std::tuple<Endpoint, Endpoint, std::uint32_t, Bytes>> seen_segments;
  std::vector<std::pair<PacketRecord, std::tuple<Endpoint, Endpoint>>> tagged;

  while (auto frame = source.next()) {
    ++result.frames_seen;
    if (!epoch) epoch = frame->timestamp_us;
    auto pkt = decode_ethernet(frame->data);
    if (!pkt || pkt->payload.empty()) continue;
    if (!transport_allowed(pkt->transport, config.transport)) continue;

    PacketRecord record{frame->timestamp_us - *epoch, pkt->src, pkt->dst, pkt->transport,
                        std::move(pkt->payload)};
    if (classify_direction(record, config) == Direction::Unrelated) continue;

    if (record.transport == Transport::Tcp) {
      auto key = std::make_tuple(record.src, record.dst, pkt->tcp_seq, record.payload);
      if (!seen_segments.insert(std::move(key)).second) {
        ++result.duplicates_dropped;
        continue;
      }
    }
    auto conn = record.src < record.dst ? std::make_tuple(record.src, record.dst)
                                        : std::make_tuple(record.dst, record.src);
    tagged.emplace_back(std::move(record), std::move(conn));
  }

  std::stable_sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) {
    return a.first.timestamp_us < b.first.timestamp_us;
  });

  // A TCP connection that resumes after another connection's payload means
  // interleaving.
  std::set<std::tuple<Endpoint, Endpoint>> closed;
  std::optional<std::tuple<Endpoint, Endpoint>> current;
  for (auto& [record, conn] : tagged) {
    if (record.transport == Transport::Tcp) {
      if (current && *current != conn) {
        closed.insert(*current);
        if (closed.count(conn)) result.interleaved_connections = true;
      }
      current = conn;
    }
    result.records.push_back(std::move(record));
  }
  return result;
}

ParseResult parse_capture_detailed(ByteView capture, const SessionConfig& config) {
  PcapFrameSource source(capture);
  return parse_frames(source, config);
}

std::vector<PacketRecord> parse_capture(ByteView capture, const SessionConfig& config) {
  return parse_capture_detailed(capture, config).records;
}

bool endpoint_matches(const Endpoint& pattern, const Endpoint& actual) {
  return pattern.address() == actual.address() &&
         (pattern.port() == 0 || pattern.port() == actual.port());
}

Direction classify_direction(const PacketRecord& record, const SessionConfig& config) {
  if (endpoint_matches(config.app, record.src) && endpoint_matches(config.device, record.dst)) {
    return Direction::Request;
  }
  if (endpoint_matches(config.device, record.src) && endpoint_matches(config.app, record.dst)) {
    return Direction::Response;
  }
  return Direction::Unrelated;
}

std::vector<Flow> segment_flows(const std::vector<PacketRecord>& records,
                                const SessionConfig& config) {
  std::vector<Flow> flows;
  bool in_responses = false;
  for (const auto& record : records) {
    switch (classify_direction(record, config)) {
      case Direction::Request:
        if (flows.empty() || in_responses) {
          flows.emplace_back();
          in_responses = false;
        }
        flows.back().requests.push_back(record);
        break;
      case Direction::Response:
        if (flows.empty()) break;  // orphan response before any request
        in_responses = true;
        flows.back().responses.push_back(record);
        break;
      case Direction::Unrelated:
        break;
    }
  }
  return flows;
}

bool check_local_connectivity(const std::vector<PacketRecord>& records) {
  return !records.empty();
}

}  // namespace replaykit::capture
