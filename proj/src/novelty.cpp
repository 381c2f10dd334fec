#include "replaykit/novelty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "replaykit/errors.hpp"

namespace replaykit::detector {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double kth_smallest(std::vector<double> values, std::size_t k) {
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   values.end());
  return values[k - 1];
}

// Canonical order so that floating-point sums do not depend on input order.
void sort_canonical(std::vector<FeatureVector>& vs) {
  std::sort(vs.begin(), vs.end(),
            [](const FeatureVector& a, const FeatureVector& b) { return a.values() < b.values(); });
}

double lrd_from(std::size_t neighbours, double reach_sum) {
  if (reach_sum == 0.0) return 1.0 / kZeroReachEpsilon;
  return static_cast<double>(neighbours) / reach_sum;
}

// Uniform double in [0, 1) from the top 53 bits, independent of the
// standard library's distribution implementations.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

int build_isolation_node(IsolationTree& tree, std::vector<std::array<double, kFeatureDims>>& pts,
                         std::size_t begin, std::size_t end, std::size_t depth,
                         std::size_t height_limit, std::mt19937_64& rng) {
  int index = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  tree.nodes[index].size = end - begin;
  if (end - begin <= 1 || depth >= height_limit) return index;

  std::vector<std::size_t> candidates;
  std::array<double, kFeatureDims> lo{};
  std::array<double, kFeatureDims> hi{};
  for (std::size_t f = 0; f < kFeatureDims; ++f) {
    lo[f] = hi[f] = pts[begin][f];
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo[f] = std::min(lo[f], pts[i][f]);
      hi[f] = std::max(hi[f], pts[i][f]);
    }
    if (hi[f] > lo[f]) candidates.push_back(f);
  }
  if (candidates.empty()) return index;  // all samples identical

  std::size_t feature = candidates[uniform_index(rng, candidates.size())];
  double split = lo[feature] + unit_uniform(rng) * (hi[feature] - lo[feature]);
  auto mid = std::partition(pts.begin() + static_cast<std::ptrdiff_t>(begin),
                            pts.begin() + static_cast<std::ptrdiff_t>(end),
                            [&](const auto& p) { return p[feature] < split; });
  auto mid_index = static_cast<std::size_t>(mid - pts.begin());
  // a split rounded onto lo or hi leaves one side empty; fall back to a
  // threshold just above lo so both sides are populated
  if (mid_index == begin || mid_index == end) {
    split = std::nextafter(lo[feature], hi[feature]);
    mid = std::partition(pts.begin() + static_cast<std::ptrdiff_t>(begin),
                         pts.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](const auto& p) { return p[feature] < split; });
    mid_index = static_cast<std::size_t>(mid - pts.begin());
  }

  tree.nodes[index].feature = static_cast<int>(feature);
  tree.nodes[index].split = split;
  int left = build_isolation_node(tree, pts, begin, mid_index, depth + 1, height_limit, rng);
  int right = build_isolation_node(tree, pts, mid_index, end, depth + 1, height_limit, rng);
  tree.nodes[index].left = left;
  tree.nodes[index].right = right;
  return index;
}

}  // namespace

std::string_view to_string(ModelKind k) {
  return k == ModelKind::Lof ? "lof" : "isolation_forest";
}

ModelKind model_kind_from_string(std::string_view s) {
  if (s == "lof") return ModelKind::Lof;
  if (s == "isolation_forest" || s == "iforest") return ModelKind::IsolationForest;
  throw ParameterError("unknown model kind '" + std::string(s) + "'");
}

std::string_view to_string(Label l) { return l == Label::Regular ? "Regular" : "Irregular"; }

Label label_from_string(std::string_view s) {
  if (s == "Regular") return Label::Regular;
  if (s == "Irregular") return Label::Irregular;
  throw ParameterError("unknown label '" + std::string(s) + "'");
}

Standardizer Standardizer::fit(std::span<const FeatureVector> training) {
  Standardizer s;
  const double n = static_cast<double>(training.size());
  std::vector<std::array<double, kFeatureDims>> rows;
  rows.reserve(training.size());
  for (const auto& v : training) rows.push_back(v.values());

  for (std::size_t dim = 0; dim < kFeatureDims; ++dim) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[dim];
    mean /= n;
    double var = 0.0;
    for (const auto& r : rows) var += (r[dim] - mean) * (r[dim] - mean);
    double sd = std::sqrt(var / n);
    // spread at rounding-noise level counts as zero
    if (!(sd > 1e-12 * std::max(1.0, std::fabs(mean)))) continue;
    s.kept_dims.push_back(dim);
    s.mean.push_back(mean);
    s.stddev.push_back(sd);
  }
  return s;
}

std::vector<double> Standardizer::apply(const FeatureVector& v) const {
  auto raw = v.values();
  std::vector<double> out(kept_dims.size());
  for (std::size_t i = 0; i < kept_dims.size(); ++i) {
    out[i] = (raw[kept_dims[i]] - mean[i]) / stddev[i];
  }
  return out;
}

LofModel::LofModel(std::vector<FeatureVector> training, Standardizer standardizer, std::size_t k,
                   double threshold)
    : training_(std::move(training)),
      standardizer_(std::move(standardizer)),
      k_(k),
      threshold_(threshold) {
  const std::size_t n = training_.size();
  if (n < 2) throw InsufficientTrainingDataError("LOF needs at least 2 training responses");
  if (k_ < 1) throw ParameterError("LOF neighbour count must be >= 1");
  if (!(threshold_ > 1.0)) throw ParameterError("LOF threshold must be > 1");
  if (standardizer_.mean.size() != standardizer_.kept_dims.size() ||
      standardizer_.stddev.size() != standardizer_.kept_dims.size()) {
    throw ParameterError("inconsistent standardization parameters");
  }
  for (std::size_t i = 0; i < standardizer_.kept_dims.size(); ++i) {
    if (standardizer_.kept_dims[i] >= kFeatureDims || !(standardizer_.stddev[i] > 0.0)) {
      throw ParameterError("invalid standardization parameters");
    }
  }
  k_eff_ = std::min(k_, n - 1);
  sort_canonical(training_);

  points_.reserve(n);
  for (const auto& v : training_) points_.push_back(standardizer_.apply(v));

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = euclidean(points_[i], points_[j]);

  k_distance_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> others;
    others.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(dist[i][j]);
    k_distance_[i] = kth_smallest(std::move(others), k_eff_);
  }

  lrd_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    double reach_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || dist[i][j] > k_distance_[i]) continue;
      ++count;
      reach_sum += std::max(k_distance_[j], dist[i][j]);
    }
    lrd_[i] = lrd_from(count, reach_sum);
  }
}

double LofModel::score(const FeatureVector& query) const {
  auto q = standardizer_.apply(query);
  const std::size_t n = points_.size();
  std::vector<double> dq(n);
  for (std::size_t i = 0; i < n; ++i) {
    dq[i] = euclidean(q, points_[i]);
    if (dq[i] == 0.0) return 1.0;
  }
  double kd = kth_smallest(dq, k_eff_);

  std::size_t count = 0;
  double reach_sum = 0.0;
  double lrd_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (dq[i] > kd) continue;
    ++count;
    reach_sum += std::max(k_distance_[i], dq[i]);
    lrd_sum += lrd_[i];
  }
  double lrd_q = lrd_from(count, reach_sum);
  return lrd_sum / static_cast<double>(count) / lrd_q;
}

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  double m = static_cast<double>(n);
  double harmonic = std::log(m - 1.0) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * (m - 1.0) / m;
}

double IsolationTree::path_length(const std::array<double, kFeatureDims>& x) const {
  std::size_t depth = 0;
  int node = 0;
  while (nodes[node].feature >= 0) {
    const auto& nd = nodes[node];
    node = x[static_cast<std::size_t>(nd.feature)] < nd.split ? nd.left : nd.right;
    ++depth;
  }
  return static_cast<double>(depth) + average_path_length(nodes[node].size);
}

IsolationForestModel::IsolationForestModel(std::vector<FeatureVector> training,
                                           std::vector<IsolationTree> trees,
                                           std::size_t subsample, std::uint64_t seed,
                                           double anomaly_cutoff)
    : training_(std::move(training)),
      trees_(std::move(trees)),
      subsample_(subsample),
      seed_(seed),
      anomaly_cutoff_(anomaly_cutoff) {
  if (training_.size() < 2) {
    throw InsufficientTrainingDataError("isolation forest needs at least 2 training responses");
  }
  if (trees_.empty()) throw ParameterError("isolation forest needs at least one tree");
  if (subsample_ < 2 || subsample_ > training_.size()) {
    throw ParameterError("isolation forest subsample must be in [2, n]");
  }
  if (!(anomaly_cutoff_ > 0.0 && anomaly_cutoff_ < 1.0)) {
    throw ParameterError("anomaly cutoff must lie in (0, 1)");
  }
  for (const auto& t : trees_) {
    if (t.nodes.empty()) throw ParameterError("isolation tree without nodes");
    for (const auto& nd : t.nodes) {
      if (nd.feature < 0) continue;
      auto size = static_cast<int>(t.nodes.size());
      if (nd.feature >= static_cast<int>(kFeatureDims) || nd.left <= 0 || nd.right <= 0 ||
          nd.left >= size || nd.right >= size) {
        throw ParameterError("malformed isolation tree");
      }
    }
  }
}

double IsolationForestModel::score(const FeatureVector& query) const {
  auto x = query.values();
  double total = 0.0;
  for (const auto& t : trees_) total += t.path_length(x);
  double mean_path = total / static_cast<double>(trees_.size());
  return std::exp2(-mean_path / average_path_length(subsample_));
}

std::size_t NoveltyModel::training_size() const noexcept {
  return std::visit([](const auto& m) { return m.training().size(); }, impl_);
}

const LofModel& NoveltyModel::lof() const {
  if (auto* m = std::get_if<LofModel>(&impl_)) return *m;
  throw ParameterError("model is not a LOF model");
}

const IsolationForestModel& NoveltyModel::isolation_forest() const {
  if (auto* m = std::get_if<IsolationForestModel>(&impl_)) return *m;
  throw ParameterError("model is not an isolation forest");
}

double NoveltyModel::score(const FeatureVector& query) const {
  return std::visit([&](const auto& m) { return m.score(query); }, impl_);
}

NoveltyModel train_lof(std::span<const FeatureVector> training, std::size_t k, double threshold) {
  if (training.size() < 2) {
    throw InsufficientTrainingDataError("LOF needs at least 2 training responses, got " +
                                        std::to_string(training.size()));
  }
  std::vector<FeatureVector> copy(training.begin(), training.end());
  sort_canonical(copy);
  auto standardizer = Standardizer::fit(copy);
  return NoveltyModel(LofModel(std::move(copy), std::move(standardizer), k, threshold));
}

double lof_score(const NoveltyModel& model, const FeatureVector& query) {
  return model.lof().score(query);
}

NoveltyModel train_isolation_forest(std::span<const FeatureVector> training, std::size_t trees,
                                    std::size_t subsample, std::uint64_t seed,
                                    double anomaly_cutoff) {
  if (training.size() < 2) {
    throw InsufficientTrainingDataError("isolation forest needs at least 2 training responses");
  }
  if (trees < 1) throw ParameterError("isolation forest needs at least one tree");
  if (subsample < 2 || subsample > training.size()) {
    throw ParameterError("isolation forest subsample must be in [2, n]");
  }

  std::mt19937_64 rng(seed);
  auto height_limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(subsample))));
  std::vector<std::size_t> indices(training.size());
  std::vector<IsolationTree> forest;
  forest.reserve(trees);
  for (std::size_t t = 0; t < trees; ++t) {
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    // partial Fisher-Yates: first `subsample` entries form the sample
    for (std::size_t i = 0; i < subsample; ++i) {
      std::size_t j = i + uniform_index(rng, indices.size() - i);
      std::swap(indices[i], indices[j]);
    }
    std::vector<std::array<double, kFeatureDims>> pts;
    pts.reserve(subsample);
    for (std::size_t i = 0; i < subsample; ++i) pts.push_back(training[indices[i]].values());
    IsolationTree tree;
    build_isolation_node(tree, pts, 0, pts.size(), 0, height_limit, rng);
    forest.push_back(std::move(tree));
  }
  return NoveltyModel(IsolationForestModel(std::vector<FeatureVector>(training.begin(), training.end()),
                                           std::move(forest), subsample, seed, anomaly_cutoff));
}

Label classify(const NoveltyModel& model, const FeatureVector& query) {
  double s = model.score(query);
  double cutoff = model.kind() == ModelKind::Lof ? model.lof().threshold()
                                                 : model.isolation_forest().anomaly_cutoff();
  return s > cutoff ? Label::Irregular : Label::Regular;
}

}  // namespace replaykit::detector
