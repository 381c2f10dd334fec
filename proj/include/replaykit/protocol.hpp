#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "replaykit/bytes.hpp"
#include "replaykit/capture.hpp"

namespace replaykit::detector {

/// Response families seen in local app<->device traffic.
enum class ResponseClass { Cleartext, StandardEncrypted, NonStandardEncrypted, Encoded };

std::string_view to_string(ResponseClass c);

inline constexpr double kCleartextPrintableRatio = 0.85;
inline constexpr double kEncodedSimilarity = 0.9;

/// TLS record header: content type 20..23, legacy version 0x03 0x00..0x04.
bool is_tls_record_header(ByteView payload);
/// DTLS record header: content type 20..23, version 0xFE 0xFD..0xFF.
bool is_dtls_record_header(ByteView payload);
/// QUIC v1 long header: high bit set, version field 0x00000001.
bool is_quic_long_header(ByteView payload);

/// TLS on TCP payloads; QUIC or DTLS on UDP payloads.
bool detect_standard_security_protocol(const std::vector<capture::PacketRecord>& records);

/// Fraction of equal bytes at equal offsets, over the longer of the two.
double hamming_similarity(ByteView a, ByteView b);

/// Classifies repeated responses to identical commands. Throws
/// ParameterError for an empty sample list.
ResponseClass classify_response_type(const std::vector<Bytes>& samples);

}  // namespace replaykit::detector
