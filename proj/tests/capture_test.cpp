#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "replaykit/capture.hpp"
#include "replaykit/errors.hpp"
#include "replaykit/pcap_writer.hpp"

using namespace replaykit;
using namespace replaykit::capture;
using namespace fixtures;

namespace {

std::vector<std::string> payload_strings(const std::vector<PacketRecord>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(to_string(r.payload));
  return out;
}

}  // namespace

TEST(ParseCapture, HeaderOnlyCaptureYieldsNothing) {
  PcapWriter w;
  EXPECT_TRUE(parse_capture(w.bytes(), session()).empty());
}

TEST(ParseCapture, BareAckIsDiscarded) {
  PcapWriter w;
  w.add_udp(1'000'000, kApp, kDevice, to_bytes("hello"));
  w.add_tcp(1'000'100, kDevice, kApp, 7, 9, tcp_flags::kAck);
  auto records = parse_capture(w.bytes(), session());
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].transport, Transport::Udp);
  EXPECT_EQ(to_string(records[0].payload), "hello");
  EXPECT_EQ(records[0].src, kApp);
  EXPECT_EQ(records[0].timestamp_us, 0);
}

TEST(ParseCapture, EpochIsFirstFrameEvenWhenFiltered) {
  PcapWriter w;
  w.add_udp(5'000'000, kDevice, kCloud, to_bytes("cloud"));
  w.add_udp(5'000'250, kApp, kDevice, to_bytes("cmd"));
  auto records = parse_capture(w.bytes(), session());
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].timestamp_us, 250);
}

TEST(ParseCapture, OffPairTrafficIsDropped) {
  PcapWriter w;
  w.add_udp(1, kDevice, kCloud, to_bytes("telemetry"));
  w.add_udp(2, kCloud, kDevice, to_bytes("ok"));
  auto records = parse_capture(w.bytes(), session());
  EXPECT_TRUE(records.empty());
  EXPECT_FALSE(check_local_connectivity(records));
}

TEST(ParseCapture, ByteSwappedHeaderIsAccepted) {
  PcapWriter w;
  w.add_udp(3'000'007, kApp, kDevice, to_bytes("abc"));
  Bytes le = w.bytes();
  // rewrite every little-endian header field as big-endian
  Bytes be = le;
  auto swap4 = [&](std::size_t off) { std::reverse(be.begin() + off, be.begin() + off + 4); };
  auto swap2 = [&](std::size_t off) { std::swap(be[off], be[off + 1]); };
  swap4(0);
  swap2(4);
  swap2(6);
  for (std::size_t off : {8, 12, 16, 20}) swap4(off);
  for (std::size_t off : {24, 28, 32, 36}) swap4(off);
  auto records = parse_capture(be, session());
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(to_string(records[0].payload), "abc");
}

TEST(ParseCapture, MalformedHeaderNamesOffset) {
  Bytes tiny = {0xd4, 0xc3, 0xb2};
  try {
    parse_capture(tiny, session());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 3u);
  }

  PcapWriter w;
  Bytes bad = w.bytes();
  bad[0] = 0x00;
  EXPECT_THROW(parse_capture(bad, session()), ParseError);
}

TEST(ParseCapture, TruncatedRecordNamesOffset) {
  PcapWriter w;
  w.add_udp(1, kApp, kDevice, to_bytes("abcdef"));
  Bytes cut(w.bytes().begin(), w.bytes().end() - 2);
  try {
    parse_capture(cut, session());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 24u + 16u);
  }
  Bytes half_header(w.bytes().begin(), w.bytes().begin() + 30);
  try {
    parse_capture(half_header, session());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 24u);
  }
}

TEST(ParseCapture, UnsupportedLinkTypeIsExplicit) {
  PcapWriter w;
  Bytes b = w.bytes();
  b[20] = 127;  // radiotap
  EXPECT_THROW(parse_capture(b, session()), UnsupportedFormatError);

  Bytes ng = {0x0a, 0x0d, 0x0d, 0x0a};
  ng.resize(32, 0);
  EXPECT_THROW(parse_capture(ng, session()), UnsupportedFormatError);
}

TEST(ParseCapture, EthernetPaddingIsNotPayload) {
  // 1-byte UDP payload gives a 43-byte frame; pad it to the 60-byte minimum.
  Bytes udp = {0xC3, 0xCB, 0x1F, 0x90, 0x00, 0x09, 0x00, 0x00, 'x'};
  Bytes frame = build_frame(kApp, kDevice, 17, udp);
  frame.resize(60, 0);
  PcapWriter w;
  w.add_frame(10, frame);
  auto records = parse_capture(w.bytes(), session());
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(to_string(records[0].payload), "x");
}

TEST(ParseCapture, Ipv6Frames) {
  Endpoint app{"fe80::1", 40000};
  Endpoint dev{"fe80::2", 9999};
  PcapWriter w;
  w.add_udp(1, app, dev, to_bytes("v6-cmd"));
  w.add_tcp(2, dev, app, 100, 1, tcp_flags::kAck | tcp_flags::kPsh, to_bytes("v6-ack"));
  auto records = parse_capture(w.bytes(), SessionConfig{app, dev});
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(payload_strings(records), (std::vector<std::string>{"v6-cmd", "v6-ack"}));
}

TEST(ParseCapture, TcpRetransmissionIsDeduplicated) {
  PcapWriter w;
  w.add_tcp(1, kApp, kDevice, 1000, 1, tcp_flags::kPsh | tcp_flags::kAck, to_bytes("ON"));
  w.add_tcp(2, kApp, kDevice, 1000, 1, tcp_flags::kPsh | tcp_flags::kAck, to_bytes("ON"));
  w.add_tcp(3, kApp, kDevice, 1002, 1, tcp_flags::kPsh | tcp_flags::kAck, to_bytes("ON"));
  auto result = parse_capture_detailed(w.bytes(), session());
  EXPECT_EQ(result.records.size(), 2u);
  EXPECT_EQ(result.duplicates_dropped, 1u);
}

TEST(ParseCapture, OutOfOrderFramesAreSorted) {
  PcapWriter w;
  w.add_udp(100, kApp, kDevice, to_bytes("first"));
  w.add_udp(300, kDevice, kApp, to_bytes("third"));
  w.add_udp(200, kApp, kDevice, to_bytes("second"));
  auto records = parse_capture(w.bytes(), session());
  EXPECT_EQ(payload_strings(records), (std::vector<std::string>{"first", "second", "third"}));
  for (std::size_t i = 1; i < records.size(); ++i)
    EXPECT_LE(records[i - 1].timestamp_us, records[i].timestamp_us);
}

TEST(ParseCapture, TransportFilterApplies) {
  PcapWriter w;
  w.add_udp(1, kApp, kDevice, to_bytes("u"));
  w.add_tcp(2, kApp, kDevice, 5, 0, tcp_flags::kPsh, to_bytes("t"));
  auto cfg = session();
  cfg.transport = TransportFilter::Tcp;
  EXPECT_EQ(payload_strings(parse_capture(w.bytes(), cfg)), std::vector<std::string>{"t"});
  cfg.transport = TransportFilter::Udp;
  EXPECT_EQ(payload_strings(parse_capture(w.bytes(), cfg)), std::vector<std::string>{"u"});
}

TEST(ParseCapture, InterleavedConnectionsAreMergedAndFlagged) {
  Endpoint app_a{kApp.address(), 50123};
  Endpoint app_b{kApp.address(), 50124};
  SessionConfig exact{app_a, kDevice};
  SessionConfig any_port{Endpoint{kApp.address(), 0}, kDevice};

  PcapWriter w;
  w.add_tcp(1, app_a, kDevice, 1, 0, tcp_flags::kPsh, to_bytes("a1"));
  w.add_tcp(2, app_b, kDevice, 1, 0, tcp_flags::kPsh, to_bytes("b1"));
  w.add_tcp(3, kDevice, app_a, 1, 3, tcp_flags::kPsh, to_bytes("a2"));

  auto pinned = parse_capture_detailed(w.bytes(), exact);
  EXPECT_EQ(payload_strings(pinned.records), (std::vector<std::string>{"a1", "a2"}));
  EXPECT_FALSE(pinned.interleaved_connections);

  auto merged = parse_capture_detailed(w.bytes(), any_port);
  EXPECT_EQ(payload_strings(merged.records), (std::vector<std::string>{"a1", "b1", "a2"}));
  EXPECT_TRUE(merged.interleaved_connections);

  // back-to-back connections are not interleaving
  PcapWriter seq;
  seq.add_tcp(1, app_a, kDevice, 1, 0, tcp_flags::kPsh, to_bytes("x"));
  seq.add_tcp(2, kDevice, app_a, 1, 2, tcp_flags::kPsh, to_bytes("y"));
  seq.add_tcp(3, app_b, kDevice, 1, 0, tcp_flags::kPsh, to_bytes("z"));
  EXPECT_FALSE(parse_capture_detailed(seq.bytes(), any_port).interleaved_connections);
}

TEST(ClassifyDirection, Definition) {
  auto cfg = session();
  EXPECT_EQ(classify_direction(request(0, "a"), cfg), Direction::Request);
  EXPECT_EQ(classify_direction(response(0, "a"), cfg), Direction::Response);
  PacketRecord cloud{0, kDevice, kCloud, Transport::Tcp, to_bytes("x")};
  EXPECT_EQ(classify_direction(cloud, cfg), Direction::Unrelated);

  SessionConfig wildcard{Endpoint{kApp.address(), 0}, kDevice};
  PacketRecord other_port{0, Endpoint{kApp.address(), 41000}, kDevice, Transport::Tcp,
                          to_bytes("a")};
  EXPECT_EQ(classify_direction(other_port, wildcard), Direction::Request);
  EXPECT_EQ(classify_direction(other_port, cfg), Direction::Unrelated);
}

TEST(SessionConfig, RejectsIdenticalEndpoints) {
  SessionConfig cfg{kApp, kApp};
  EXPECT_THROW(cfg.validate(), ParameterError);
  EXPECT_NO_THROW(session().validate());
}

TEST(SegmentFlows, OperationExampleSequence) {
  std::vector<PacketRecord> rs = {request(1, "A1"),  response(2, "A2"), request(3, "B1"),
                                  response(4, "B2"), response(5, "B3"), request(6, "C1"),
                                  request(7, "C2"),  response(8, "C3")};
  auto flows = segment_flows(rs, session());
  ASSERT_EQ(flows.size(), 3u);
  EXPECT_EQ(payload_strings(flows[0].requests), std::vector<std::string>{"A1"});
  EXPECT_EQ(payload_strings(flows[0].responses), std::vector<std::string>{"A2"});
  EXPECT_EQ(payload_strings(flows[1].requests), std::vector<std::string>{"B1"});
  EXPECT_EQ(payload_strings(flows[1].responses), (std::vector<std::string>{"B2", "B3"}));
  EXPECT_EQ(payload_strings(flows[2].requests), (std::vector<std::string>{"C1", "C2"}));
  EXPECT_EQ(payload_strings(flows[2].responses), std::vector<std::string>{"C3"});
}

TEST(SegmentFlows, EmptyAndOrphans) {
  EXPECT_TRUE(segment_flows({}, session()).empty());
  auto flows = segment_flows({response(1, "X"), request(2, "A"), response(3, "B")}, session());
  ASSERT_EQ(flows.size(), 1u);
  EXPECT_EQ(payload_strings(flows[0].requests), std::vector<std::string>{"A"});
  EXPECT_EQ(payload_strings(flows[0].responses), std::vector<std::string>{"B"});
}

TEST(SegmentFlows, TrailingRequestsWithoutResponses) {
  auto flows = segment_flows({request(1, "A"), response(2, "B"), request(3, "C")}, session());
  ASSERT_EQ(flows.size(), 2u);
  EXPECT_TRUE(flows[1].responses.empty());
}

// Random direction sequences: every kept record lands in exactly one flow,
// order is preserved, no Unrelated record survives, and requests precede
// responses inside each flow.
TEST(SegmentFlows, PartitionProperty) {
  std::mt19937_64 rng(7);
  auto cfg = session();
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<PacketRecord> rs;
    std::size_t len = rng() % 20;
    for (std::size_t i = 0; i < len; ++i) {
      auto payload = std::to_string(i);
      switch (rng() % 3) {
        case 0: rs.push_back(request(static_cast<std::int64_t>(i), payload)); break;
        case 1: rs.push_back(response(static_cast<std::int64_t>(i), payload)); break;
        default:
          rs.push_back(PacketRecord{static_cast<std::int64_t>(i), kDevice, kCloud, Transport::Tcp,
                                    to_bytes(payload)});
      }
    }
    // expected: related records minus leading responses
    std::vector<PacketRecord> expected;
    bool seen_request = false;
    for (const auto& r : rs) {
      auto d = classify_direction(r, cfg);
      if (d == Direction::Request) seen_request = true;
      if (d == Direction::Unrelated || (d == Direction::Response && !seen_request)) continue;
      expected.push_back(r);
    }

    auto flows = segment_flows(rs, cfg);
    std::vector<PacketRecord> rebuilt;
    for (const auto& f : flows) {
      ASSERT_FALSE(f.requests.empty());
      rebuilt.insert(rebuilt.end(), f.requests.begin(), f.requests.end());
      rebuilt.insert(rebuilt.end(), f.responses.begin(), f.responses.end());
      for (const auto& r : f.requests) EXPECT_EQ(classify_direction(r, cfg), Direction::Request);
      for (const auto& r : f.responses) EXPECT_EQ(classify_direction(r, cfg), Direction::Response);
      if (!f.responses.empty()) {
        EXPECT_LE(f.requests.back().timestamp_us, f.responses.front().timestamp_us);
      }
    }
    EXPECT_EQ(rebuilt, expected);
  }
}

TEST(LocalConnectivity, PresenceOfPackets) {
  EXPECT_FALSE(check_local_connectivity({}));
  EXPECT_TRUE(check_local_connectivity({request(0, "x", Transport::Udp)}));
}

TEST(EndpointTest, ParseAndCanonicalize) {
  auto ep = Endpoint::parse("127.0.0.1:8080");
  EXPECT_EQ(ep.address(), "127.0.0.1");
  EXPECT_EQ(ep.port(), 8080);
  auto v6 = Endpoint::parse("[FE80:0:0::1]:53");
  EXPECT_EQ(v6.address(), "fe80::1");
  EXPECT_EQ(v6.to_string(), "[fe80::1]:53");
  EXPECT_THROW(Endpoint::parse("300.1.1.1:80"), ParameterError);
  EXPECT_THROW(Endpoint::parse("10.0.0.1:70000"), ParameterError);
  EXPECT_THROW(Endpoint::parse("10.0.0.1"), ParameterError);
}
