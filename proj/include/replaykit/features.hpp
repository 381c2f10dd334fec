#pragma once

#include <array>
#include <cstddef>

#include "replaykit/bytes.hpp"

namespace replaykit::detector {

inline constexpr std::size_t kHistogramBuckets = 16;
inline constexpr std::size_t kFeatureDims = 3 + kHistogramBuckets;

/// Fixed-length summary of one response payload.
///
/// Layout of values(): [length, entropy, printable_ratio, bucket_0 .. bucket_15]
/// where bucket i is the fraction of bytes in [16i, 16i+15].
struct FeatureVector {
  double length = 0.0;
  double entropy = 0.0;          // bits per byte, [0, 8]
  double printable_ratio = 0.0;  // [0, 1]
  std::array<double, kHistogramBuckets> histogram{};

  std::array<double, kFeatureDims> values() const;
  static FeatureVector from_values(const std::array<double, kFeatureDims>& v);

  bool operator==(const FeatureVector&) const = default;
};

/// True for 0x20..0x7E plus tab, LF and CR.
constexpr bool is_printable(std::uint8_t b) {
  return (b >= 0x20 && b <= 0x7E) || b == 0x09 || b == 0x0A || b == 0x0D;
}

double shannon_entropy(ByteView payload);
double printable_ratio(ByteView payload);

FeatureVector featurize(ByteView payload);

}  // namespace replaykit::detector
