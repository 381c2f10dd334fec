#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace replaykit {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string to_hex(ByteView b);

/// Throws FormatError on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

std::string base64_encode(ByteView b);

/// Throws FormatError on characters outside the standard alphabet.
Bytes base64_decode(std::string_view s);

}  // namespace replaykit
