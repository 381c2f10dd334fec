#pragma once

// One-class novelty detection over response features: Local Outlier Factor
// and Isolation Forest. Models are immutable once trained; scoring is const
// and safe from any number of threads.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "replaykit/features.hpp"

namespace replaykit::detector {

enum class ModelKind { Lof, IsolationForest };
enum class Label { Regular, Irregular };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);
std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

inline constexpr std::size_t kDefaultLofK = 5;
inline constexpr double kDefaultLofThreshold = 1.5;
inline constexpr double kDefaultAnomalyCutoff = 0.6;
/// Reachability sums of zero (duplicate points) give lrd = 1 / kZeroReachEpsilon.
inline constexpr double kZeroReachEpsilon = 1e-12;

/// Per-dimension z-score transform. Dimensions with zero spread in the
/// training set are dropped.
struct Standardizer {
  std::vector<std::size_t> kept_dims;
  std::vector<double> mean;    // indexed like kept_dims
  std::vector<double> stddev;  // population stddev, > 0

  static Standardizer fit(std::span<const FeatureVector> training);
  std::vector<double> apply(const FeatureVector& v) const;

  bool operator==(const Standardizer&) const = default;
};

class LofModel {
 public:
  /// Rebuilds the neighbourhood caches from stored parameters (used by the
  /// model loader). Throws ParameterError when the parameters are inconsistent.
  LofModel(std::vector<FeatureVector> training, Standardizer standardizer, std::size_t k,
           double threshold);

  const std::vector<FeatureVector>& training() const noexcept { return training_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t k_eff() const noexcept { return k_eff_; }
  double threshold() const noexcept { return threshold_; }

  double score(const FeatureVector& query) const;

  /// Training-point caches, exposed for tests.
  const std::vector<double>& k_distances() const noexcept { return k_distance_; }
  const std::vector<double>& local_reachability() const noexcept { return lrd_; }

 private:
  std::vector<FeatureVector> training_;
  Standardizer standardizer_;
  std::size_t k_;
  std::size_t k_eff_;
  double threshold_;

  std::vector<std::vector<double>> points_;  // standardized training set
  std::vector<double> k_distance_;
  std::vector<double> lrd_;
};

struct IsolationNode {
  // Leaf when feature < 0; `size` is the number of training samples reaching it.
  int feature = -1;
  double split = 0.0;
  int left = -1;
  int right = -1;
  std::size_t size = 0;

  bool operator==(const IsolationNode&) const = default;
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  // nodes[0] is the root

  double path_length(const std::array<double, kFeatureDims>& x) const;
  bool operator==(const IsolationTree&) const = default;
};

class IsolationForestModel {
 public:
  IsolationForestModel(std::vector<FeatureVector> training, std::vector<IsolationTree> trees,
                       std::size_t subsample, std::uint64_t seed, double anomaly_cutoff);

  const std::vector<FeatureVector>& training() const noexcept { return training_; }
  const std::vector<IsolationTree>& trees() const noexcept { return trees_; }
  std::size_t subsample() const noexcept { return subsample_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double anomaly_cutoff() const noexcept { return anomaly_cutoff_; }

  /// 2^(-E[h(x)] / c(subsample)), in (0, 1].
  double score(const FeatureVector& query) const;

 private:
  std::vector<FeatureVector> training_;
  std::vector<IsolationTree> trees_;
  std::size_t subsample_;
  std::uint64_t seed_;
  double anomaly_cutoff_;
};

class NoveltyModel {
 public:
  explicit NoveltyModel(LofModel m) : impl_(std::move(m)) {}
  explicit NoveltyModel(IsolationForestModel m) : impl_(std::move(m)) {}

  ModelKind kind() const noexcept {
    return std::holds_alternative<LofModel>(impl_) ? ModelKind::Lof : ModelKind::IsolationForest;
  }
  std::size_t training_size() const noexcept;

  /// Throws ParameterError when the model is of the other kind.
  const LofModel& lof() const;
  const IsolationForestModel& isolation_forest() const;

  /// LOF score or isolation-forest anomaly score, depending on kind().
  double score(const FeatureVector& query) const;

 private:
  std::variant<LofModel, IsolationForestModel> impl_;
};

/// Average path length of an unsuccessful BST search over n points.
double average_path_length(std::size_t n);

/// k is clamped to n-1. Throws InsufficientTrainingDataError when n < 2.
NoveltyModel train_lof(std::span<const FeatureVector> training, std::size_t k = kDefaultLofK,
                       double threshold = kDefaultLofThreshold);

double lof_score(const NoveltyModel& model, const FeatureVector& query);

NoveltyModel train_isolation_forest(std::span<const FeatureVector> training, std::size_t trees,
                                    std::size_t subsample, std::uint64_t seed,
                                    double anomaly_cutoff = kDefaultAnomalyCutoff);

Label classify(const NoveltyModel& model, const FeatureVector& query);

}  // namespace replaykit::detector
