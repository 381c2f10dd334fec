#include "replaykit/sim/keyed.hpp"

#include <cstdio>

namespace replaykit::sim {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t keyed_hash(ByteView key, ByteView data, std::uint64_t salt) {
  // FNV-1a over salt || key || len(data) || data, finished with a splitmix round
  std::uint64_t h = 0xcbf29ce484222325ULL ^ salt;
  auto mix = [&](std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (auto b : key) mix(b);
  for (int i = 0; i < 8; ++i) mix(static_cast<std::uint8_t>(data.size() >> (8 * i)));
  for (auto b : data) mix(b);
  return splitmix64(h);
}

Bytes keyed_tag(ByteView key, ByteView data, std::size_t size) {
  Bytes out;
  for (std::uint64_t block = 0; out.size() < size; ++block) {
    std::uint64_t v = keyed_hash(key, data, block + 1);
    for (int i = 0; i < 8 && out.size() < size; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  return out;
}

Bytes xor_keystream(ByteView key, ByteView data) {
  std::uint64_t state = keyed_hash(key, {}, 0x5EED);
  Bytes out(data.begin(), data.end());
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % 8 == 0) word = splitmix64(state);
    out[i] ^= static_cast<std::uint8_t>(word >> (8 * (i % 8)));
  }
  return out;
}

std::string decimal_signature(ByteView key, ByteView data) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%020llu",
                static_cast<unsigned long long>(keyed_hash(key, data, 0x51C)));
  return buf;
}

}  // namespace replaykit::sim
