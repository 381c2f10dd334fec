#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lof_oracle.hpp"
#include "replaykit/errors.hpp"
#include "replaykit/features.hpp"
#include "replaykit/novelty.hpp"

using namespace replaykit;
using namespace replaykit::detector;

namespace {

FeatureVector from_point(const std::vector<double>& p) {
  std::array<double, kFeatureDims> v{};
  std::copy(p.begin(), p.end(), v.begin());
  return FeatureVector::from_values(v);
}

std::vector<double> to_point(const FeatureVector& f) {
  auto v = f.values();
  return {v.begin(), v.end()};
}

FeatureVector scalar(double x) { return from_point({x}); }

std::vector<FeatureVector> line_0_to_4() {
  return {scalar(0), scalar(1), scalar(2), scalar(3), scalar(4)};
}

double oracle_for(const std::vector<FeatureVector>& training, const FeatureVector& q,
                  std::size_t k) {
  std::vector<oracle::Point> raw;
  for (const auto& t : training) raw.push_back(to_point(t));
  return oracle::lof(raw, to_point(q), k);
}

std::vector<FeatureVector> json_state_responses() {
  std::vector<FeatureVector> out;
  for (int i = 0; i < 10; ++i) {
    std::string state = i % 2 ? "REVERSE" : "OBVERSE";
    std::string body = R"({"ack":")" + state + R"(","seq":)" + std::to_string(100 + i) +
                       R"(,"uptime":)" + std::to_string(73110 + 37 * i) + "}";
    out.push_back(featurize(to_bytes(body)));
  }
  return out;
}

}  // namespace

TEST(TrainLof, IdenticalVectorsScoreRegular) {
  std::vector<FeatureVector> same(10, featurize(to_bytes(R"({"state":"on"})")));
  auto model = train_lof(same, 5);
  EXPECT_EQ(model.lof().k_eff(), 5u);
  EXPECT_TRUE(model.lof().standardizer().kept_dims.empty());
  EXPECT_EQ(lof_score(model, same[0]), 1.0);
  EXPECT_EQ(classify(model, same[0]), Label::Regular);
}

TEST(TrainLof, ClampsNeighbourCount) {
  auto model = train_lof(std::vector<FeatureVector>{scalar(0), scalar(1)}, 5);
  EXPECT_EQ(model.lof().k(), 5u);
  EXPECT_EQ(model.lof().k_eff(), 1u);
}

TEST(TrainLof, RejectsTooFewSamples) {
  EXPECT_THROW(train_lof(std::vector<FeatureVector>{scalar(0)}, 5), InsufficientTrainingDataError);
  EXPECT_THROW(train_lof(std::vector<FeatureVector>{}, 5), InsufficientTrainingDataError);
  EXPECT_THROW(train_lof(line_0_to_4(), 0), ParameterError);
  EXPECT_THROW(train_lof(line_0_to_4(), 2, 1.0), ParameterError);
}

TEST(LofScore, InlierOnLine) {
  auto training = line_0_to_4();
  auto model = train_lof(training, 2);
  double oracle_value = oracle_for(training, scalar(2.5), 2);
  EXPECT_NEAR(oracle_value, 1.0, 0.2);
  EXPECT_NEAR(lof_score(model, scalar(2.5)), oracle_value, 1e-12);
}

TEST(LofScore, FarOutlierOnLine) {
  auto training = line_0_to_4();
  auto model = train_lof(training, 2);
  double oracle_value = oracle_for(training, scalar(100), 2);
  EXPECT_GT(oracle_value, 10.0);
  EXPECT_NEAR(lof_score(model, scalar(100)), oracle_value, 1e-9);
}

TEST(LofScore, CoincidentQueryIsExactlyOne) {
  auto model = train_lof(line_0_to_4(), 2);
  EXPECT_EQ(lof_score(model, scalar(3)), 1.0);
}

TEST(LofScore, DuplicateTrainingPointsUseEpsilonDensity) {
  std::vector<FeatureVector> training = {scalar(0), scalar(0), scalar(0), scalar(5), scalar(5),
                                         scalar(5)};
  auto model = train_lof(training, 2);
  for (double lrd : model.lof().local_reachability()) EXPECT_EQ(lrd, 1.0 / kZeroReachEpsilon);
  double expected = oracle_for(training, scalar(2), 2);
  EXPECT_NEAR(lof_score(model, scalar(2)), expected, 1e-9 * expected);
  EXPECT_GT(lof_score(model, scalar(2)), 1e6);
}

// Random datasets against the exhaustive oracle.
TEST(LofScore, MatchesBruteForceOracle) {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int dataset = 0; dataset < 100; ++dataset) {
    std::size_t n = 2 + rng() % 49;
    std::size_t d = 1 + rng() % kFeatureDims;
    std::size_t k = 1 + rng() % 10;
    std::vector<FeatureVector> training;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(d);
      for (auto& x : p) x = gauss(rng) * 3.0 + 1.0;
      training.push_back(from_point(p));
    }
    auto model = train_lof(training, k);
    for (int q = 0; q < 20; ++q) {
      std::vector<double> p(d);
      for (auto& x : p) x = gauss(rng) * (q < 10 ? 3.0 : 12.0);
      auto query = from_point(p);
      EXPECT_NEAR(lof_score(model, query), oracle_for(training, query, k), 1e-9)
          << "dataset " << dataset << " query " << q;
    }
  }
}

TEST(LofScore, OrderIndependent) {
  std::mt19937_64 rng(99);
  auto training = json_state_responses();
  auto query = featurize(to_bytes(R"({"ack":"OBVERSE","seq":311,"uptime":99001})"));
  double base = lof_score(train_lof(training), query);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(training.begin(), training.end(), rng);
    EXPECT_EQ(lof_score(train_lof(training), query), base);
  }
}

TEST(Classify, ThresholdComparison) {
  // scores 1.0 and 11.2 against threshold 1.5
  EXPECT_LT(1.0, kDefaultLofThreshold);
  EXPECT_GT(11.2, kDefaultLofThreshold);
  auto model = train_lof(line_0_to_4(), 2, 1.5);
  EXPECT_EQ(classify(model, scalar(2)), Label::Regular);
  EXPECT_EQ(classify(model, scalar(100)), Label::Irregular);
}

TEST(Classify, ErrorMessageAgainstJsonStateResponses) {
  auto training = json_state_responses();
  auto model = train_lof(training);
  auto error = featurize(to_bytes("unauthorized"));
  double oracle_value = oracle_for(training, error, 5);
  EXPECT_GT(oracle_value, kDefaultLofThreshold);
  EXPECT_NEAR(lof_score(model, error), oracle_value, 1e-9 * oracle_value);
  EXPECT_EQ(classify(model, error), Label::Irregular);

  auto fresh = featurize(to_bytes(R"({"ack":"OBVERSE","seq":104,"uptime":73300})"));
  EXPECT_EQ(classify(model, fresh), Label::Regular);
}

TEST(Classify, RaisingThresholdNeverCreatesIrregular) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<FeatureVector> training;
  for (int i = 0; i < 20; ++i) training.push_back(from_point({gauss(rng), gauss(rng)}));
  for (int q = 0; q < 200; ++q) {
    auto query = from_point({gauss(rng) * 4, gauss(rng) * 4});
    Label previous = Label::Irregular;
    for (double t : {1.01, 1.2, 1.5, 2.0, 3.0, 10.0, 100.0}) {
      Label l = classify(train_lof(training, 5, t), query);
      if (previous == Label::Regular) EXPECT_EQ(l, Label::Regular);
      previous = l;
    }
  }
}
