#include "replaykit/pcap_writer.hpp"

#include <arpa/inet.h>

#include "replaykit/errors.hpp"

namespace replaykit {

namespace {

void put_le32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_le16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_be16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
void put_be32(Bytes& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t ones_complement_sum(ByteView data, std::uint32_t seed = 0) {
  std::uint32_t sum = seed;
  for (std::size_t i = 0; i + 1 < data.size(); i += 2) sum += (data[i] << 8) | data[i + 1];
  if (data.size() % 2) sum += data.back() << 8;
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<std::uint16_t>(sum);
}

Bytes raw_address(const Endpoint& ep) {
  Bytes raw(ep.family() == IpFamily::V4 ? 4 : 16);
  inet_pton(ep.family() == IpFamily::V4 ? AF_INET : AF_INET6, ep.address().c_str(), raw.data());
  return raw;
}

// Deterministic locally-administered MAC derived from the IP address.
void put_mac(Bytes& out, const Bytes& ip) {
  out.push_back(0x02);
  out.push_back(0x00);
  for (std::size_t i = ip.size() - 4; i < ip.size(); ++i) out.push_back(ip[i]);
}

}  // namespace

Bytes build_frame(const Endpoint& src, const Endpoint& dst, std::uint8_t ip_proto,
                  ByteView l4_segment) {
  if (src.family() != dst.family()) throw ParameterError("mixed address families in frame");
  Bytes src_ip = raw_address(src);
  Bytes dst_ip = raw_address(dst);

  Bytes l4(l4_segment.begin(), l4_segment.end());
  // transport checksum over the pseudo-header
  Bytes pseudo;
  pseudo.insert(pseudo.end(), src_ip.begin(), src_ip.end());
  pseudo.insert(pseudo.end(), dst_ip.begin(), dst_ip.end());
  if (src.family() == IpFamily::V4) {
    pseudo.push_back(0);
    pseudo.push_back(ip_proto);
    put_be16(pseudo, static_cast<std::uint16_t>(l4.size()));
  } else {
    put_be32(pseudo, static_cast<std::uint32_t>(l4.size()));
    pseudo.insert(pseudo.end(), {0, 0, 0, ip_proto});
  }
  std::size_t checksum_at = ip_proto == 6 ? 16 : 6;
  std::uint16_t csum = ~ones_complement_sum(l4, ones_complement_sum(pseudo));
  if (ip_proto == 17 && csum == 0) csum = 0xFFFF;
  l4[checksum_at] = static_cast<std::uint8_t>(csum >> 8);
  l4[checksum_at + 1] = static_cast<std::uint8_t>(csum);

  Bytes frame;
  put_mac(frame, dst_ip);
  put_mac(frame, src_ip);
  if (src.family() == IpFamily::V4) {
    put_be16(frame, 0x0800);
    Bytes ip;
    ip.push_back(0x45);
    ip.push_back(0);
    put_be16(ip, static_cast<std::uint16_t>(20 + l4.size()));
    put_be16(ip, 0);       // id
    put_be16(ip, 0x4000);  // DF
    ip.push_back(64);
    ip.push_back(ip_proto);
    put_be16(ip, 0);
    ip.insert(ip.end(), src_ip.begin(), src_ip.end());
    ip.insert(ip.end(), dst_ip.begin(), dst_ip.end());
    std::uint16_t ip_csum = ~ones_complement_sum(ip);
    ip[10] = static_cast<std::uint8_t>(ip_csum >> 8);
    ip[11] = static_cast<std::uint8_t>(ip_csum);
    frame.insert(frame.end(), ip.begin(), ip.end());
  } else {
    put_be16(frame, 0x86DD);
    put_be32(frame, 0x60000000);
    put_be16(frame, static_cast<std::uint16_t>(l4.size()));
    frame.push_back(ip_proto);
    frame.push_back(64);
    frame.insert(frame.end(), src_ip.begin(), src_ip.end());
    frame.insert(frame.end(), dst_ip.begin(), dst_ip.end());
  }
  frame.insert(frame.end(), l4.begin(), l4.end());
  return frame;
}

PcapWriter::PcapWriter() {
  put_le32(out_, 0xa1b2c3d4);
  put_le16(out_, 2);
  put_le16(out_, 4);
  put_le32(out_, 0);       // thiszone
  put_le32(out_, 0);       // sigfigs
  put_le32(out_, 262144);  // snaplen
  put_le32(out_, 1);       // Ethernet
}

void PcapWriter::add_frame(std::int64_t timestamp_us, ByteView frame) {
  put_le32(out_, static_cast<std::uint32_t>(timestamp_us / 1'000'000));
  put_le32(out_, static_cast<std::uint32_t>(timestamp_us % 1'000'000));
  put_le32(out_, static_cast<std::uint32_t>(frame.size()));
  put_le32(out_, static_cast<std::uint32_t>(frame.size()));
  out_.insert(out_.end(), frame.begin(), frame.end());
  ++frames_;
}

void PcapWriter::add_udp(std::int64_t timestamp_us, const Endpoint& src, const Endpoint& dst,
                         ByteView payload) {
  Bytes udp;
  put_be16(udp, src.port());
  put_be16(udp, dst.port());
  put_be16(udp, static_cast<std::uint16_t>(8 + payload.size()));
  put_be16(udp, 0);
  udp.insert(udp.end(), payload.begin(), payload.end());
  add_frame(timestamp_us, build_frame(src, dst, 17, udp));
}

void PcapWriter::add_tcp(std::int64_t timestamp_us, const Endpoint& src, const Endpoint& dst,
                         std::uint32_t seq, std::uint32_t ack, std::uint8_t flags,
                         ByteView payload) {
  Bytes tcp;
  put_be16(tcp, src.port());
  put_be16(tcp, dst.port());
  put_be32(tcp, seq);
  put_be32(tcp, ack);
  tcp.push_back(5 << 4);
  tcp.push_back(flags);
  put_be16(tcp, 65535);  // window
  put_be16(tcp, 0);
  put_be16(tcp, 0);
  tcp.insert(tcp.end(), payload.begin(), payload.end());
  add_frame(timestamp_us, build_frame(src, dst, 6, tcp));
}

TcpStreamWriter::TcpStreamWriter(PcapWriter& writer, Endpoint client, Endpoint server,
                                 std::uint32_t client_isn, std::uint32_t server_isn)
    : writer_(writer),
      client_(std::move(client)),
      server_(std::move(server)),
      client_seq_(client_isn),
      server_seq_(server_isn) {}

void TcpStreamWriter::open(std::int64_t& clock_us, std::int64_t tick_us) {
  using namespace tcp_flags;
  writer_.add_tcp(clock_us, client_, server_, client_seq_, 0, kSyn);
  clock_us += tick_us;
  ++client_seq_;
  writer_.add_tcp(clock_us, server_, client_, server_seq_, client_seq_, kSyn | kAck);
  clock_us += tick_us;
  ++server_seq_;
  writer_.add_tcp(clock_us, client_, server_, client_seq_, server_seq_, kAck);
  clock_us += tick_us;
}

void TcpStreamWriter::send(bool from_client, ByteView payload, std::int64_t& clock_us,
                           std::int64_t tick_us) {
  using namespace tcp_flags;
  auto& seq = from_client ? client_seq_ : server_seq_;
  auto& peer_seq = from_client ? server_seq_ : client_seq_;
  const auto& src = from_client ? client_ : server_;
  const auto& dst = from_client ? server_ : client_;
  writer_.add_tcp(clock_us, src, dst, seq, peer_seq, kPsh | kAck, payload);
  clock_us += tick_us;
  seq += static_cast<std::uint32_t>(payload.size());
  writer_.add_tcp(clock_us, dst, src, peer_seq, seq, kAck);
  clock_us += tick_us;
}

void TcpStreamWriter::close(std::int64_t& clock_us, std::int64_t tick_us) {
  using namespace tcp_flags;
  writer_.add_tcp(clock_us, client_, server_, client_seq_, server_seq_, kFin | kAck);
  clock_us += tick_us;
  ++client_seq_;
  writer_.add_tcp(clock_us, server_, client_, server_seq_, client_seq_, kFin | kAck);
  clock_us += tick_us;
  ++server_seq_;
  writer_.add_tcp(clock_us, client_, server_, client_seq_, server_seq_, kAck);
  clock_us += tick_us;
}

}  // namespace replaykit
