#pragma once

// Toy keyed primitives for the simulated devices. They give replay-validity
// semantics (a tag verifies or it does not), not confidentiality.

#include <cstdint>

#include "replaykit/bytes.hpp"

namespace replaykit::sim {

std::uint64_t splitmix64(std::uint64_t& state);

/// 64-bit keyed digest of `data`; `salt` selects independent functions.
std::uint64_t keyed_hash(ByteView key, ByteView data, std::uint64_t salt = 0);

/// `size` bytes of keyed digest.
Bytes keyed_tag(ByteView key, ByteView data, std::size_t size);

/// Key-derived pseudo-random pad XORed over `data` (same pad for the same key).
Bytes xor_keystream(ByteView key, ByteView data);

/// keyed_hash rendered as a zero-padded 20-digit decimal string.
std::string decimal_signature(ByteView key, ByteView data);

}  // namespace replaykit::sim
