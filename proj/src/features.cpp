#include "replaykit/features.hpp"

#include <algorithm>
#include <cmath>

namespace replaykit::detector {

std::array<double, kFeatureDims> FeatureVector::values() const {
  std::array<double, kFeatureDims> v{};
  v[0] = length;
  v[1] = entropy;
  v[2] = printable_ratio;
  std::copy(histogram.begin(), histogram.end(), v.begin() + 3);
  return v;
}

FeatureVector FeatureVector::from_values(const std::array<double, kFeatureDims>& v) {
  FeatureVector f;
  f.length = v[0];
  f.entropy = v[1];
  f.printable_ratio = v[2];
  std::copy(v.begin() + 3, v.end(), f.histogram.begin());
  return f;
}

double shannon_entropy(ByteView payload) {
  if (payload.empty()) return 0.0;
  std::array<std::size_t, 256> counts{};
  for (auto b : payload) ++counts[b];
  // summing in count order makes payloads with equal count multisets agree bit for bit
  std::sort(counts.begin(), counts.end());
  const double n = static_cast<double>(payload.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  // rounding can push a single-symbol payload to -0.0 or slightly past 8
  return std::clamp(h, 0.0, 8.0);
}

double printable_ratio(ByteView payload) {
  if (payload.empty()) return 0.0;
  auto printable = std::count_if(payload.begin(), payload.end(), is_printable);
  return static_cast<double>(printable) / static_cast<double>(payload.size());
}

FeatureVector featurize(ByteView payload) {
  FeatureVector f;
  if (payload.empty()) return f;
  f.length = static_cast<double>(payload.size());
  f.entropy = shannon_entropy(payload);
  f.printable_ratio = printable_ratio(payload);
  std::array<std::size_t, kHistogramBuckets> buckets{};
  for (auto b : payload) ++buckets[b >> 4];
  for (std::size_t i = 0; i < kHistogramBuckets; ++i) {
    f.histogram[i] = static_cast<double>(buckets[i]) / f.length;
  }
  return f;
}

}  // namespace replaykit::detector
