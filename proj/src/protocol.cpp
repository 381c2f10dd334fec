#include "replaykit/protocol.hpp"

#include <algorithm>

#include "replaykit/errors.hpp"
#include "replaykit/features.hpp"

namespace replaykit::detector {

namespace {

bool is_record_content_type(std::uint8_t b) { return b >= 0x14 && b <= 0x17; }

}  // namespace

std::string_view to_string(ResponseClass c) {
  switch (c) {
    case ResponseClass::Cleartext: return "cleartext";
    case ResponseClass::StandardEncrypted: return "standard_encrypted";
    case ResponseClass::NonStandardEncrypted: return "non_standard_encrypted";
    case ResponseClass::Encoded: return "encoded";
  }
  return "cleartext";
}

bool is_tls_record_header(ByteView p) {
  return p.size() >= 3 && is_record_content_type(p[0]) && p[1] == 0x03 && p[2] <= 0x04;
}

bool is_dtls_record_header(ByteView p) {
  return p.size() >= 3 && is_record_content_type(p[0]) && p[1] == 0xFE && p[2] >= 0xFD;
}

bool is_quic_long_header(ByteView p) {
  return p.size() >= 5 && (p[0] & 0x80) != 0 && p[1] == 0x00 && p[2] == 0x00 && p[3] == 0x00 &&
         p[4] == 0x01;
}

bool detect_standard_security_protocol(const std::vector<capture::PacketRecord>& records) {
  return std::any_of(records.begin(), records.end(), [](const capture::PacketRecord& r) {
    if (r.transport == capture::Transport::Tcp) return is_tls_record_header(r.payload);
    return is_quic_long_header(r.payload) || is_dtls_record_header(r.payload);
  });
}

double hamming_similarity(ByteView a, ByteView b) {
  std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  std::size_t common = std::min(a.size(), b.size());
  std::size_t equal = 0;
  for (std::size_t i = 0; i < common; ++i) equal += a[i] == b[i];
  return static_cast<double>(equal) / static_cast<double>(longest);
}

ResponseClass classify_response_type(const std::vector<Bytes>& samples) {
  if (samples.empty()) throw ParameterError("response classification needs at least one sample");

  // Samples carry no transport, so any of the three header shapes counts.
  for (const auto& s : samples) {
    if (is_tls_record_header(s) || is_dtls_record_header(s) || is_quic_long_header(s)) {
      return ResponseClass::StandardEncrypted;
    }
  }

  double ratio_sum = 0.0;
  for (const auto& s : samples) ratio_sum += printable_ratio(s);
  if (ratio_sum / static_cast<double>(samples.size()) >= kCleartextPrintableRatio) {
    return ResponseClass::Cleartext;
  }

  bool identical = std::all_of(samples.begin(), samples.end(),
                               [&](const Bytes& s) { return s == samples.front(); });
  if (identical) return ResponseClass::Encoded;

  double similarity_sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      similarity_sum += hamming_similarity(samples[i], samples[j]);
      ++pairs;
    }
  }
  if (similarity_sum / static_cast<double>(pairs) >= kEncodedSimilarity) {
    return ResponseClass::Encoded;
  }
  return ResponseClass::NonStandardEncrypted;
}

}  // namespace replaykit::detector
