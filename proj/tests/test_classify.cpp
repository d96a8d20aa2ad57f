#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lcfuse/classify.hpp"
#include "test_util.hpp"

using namespace lcfuse;
using testutil::error_code_of;

namespace {

struct BlobData {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
};

BlobData two_blobs(std::mt19937_64& rng, int per_class, double sigma) {
  const std::vector<std::vector<double>> centers{{0.0, 0.0, 0.0}, {4.0, -2.0, 1.0}};
  std::normal_distribution<double> noise(0.0, sigma);
  BlobData d;
  for (int cls = 0; cls < 2; ++cls)
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> f = centers[cls];
      for (auto& v : f) v += noise(rng);
      d.features.push_back(f);
      d.labels.push_back(cls);
    }
  return d;
}

}  // namespace

TEST(Train, CentroidsApproachTrueMeans) {
  std::mt19937_64 rng(211);
  const double sigma = 0.5;
  const int n = 400;
  const BlobData d = two_blobs(rng, n, sigma);
  const ClassifierModel m = train_classifier(d.features, d.labels, 2);
  const double bound = 3.0 * sigma / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(m.centroid(0, 0), 0.0, bound);
  EXPECT_NEAR(m.centroid(0, 1), 0.0, bound);
  EXPECT_NEAR(m.centroid(1, 0), 4.0, bound);
  EXPECT_NEAR(m.centroid(1, 2), 1.0, bound);
}

TEST(Train, UndersampledClassRejected) {
  const std::vector<std::vector<double>> f{{0.0}, {0.1}, {5.0}};
  const std::vector<int> l{0, 0, 1};
  EXPECT_EQ(error_code_of([&] { train_classifier(f, l, 2); }),
            ErrorCode::ClassUndersampled);
}

TEST(Train, DuplicateSamplesHitTheVarianceFloor) {
  const std::vector<std::vector<double>> f{{1.0, 2.0}, {1.0, 2.0}, {3.0, 4.0}, {3.0, 4.0}};
  const std::vector<int> l{0, 0, 1, 1};
  const ClassifierModel m = train_classifier(f, l, 2);
  for (int cls = 0; cls < 2; ++cls)
    for (int feat = 0; feat < 2; ++feat)
      EXPECT_DOUBLE_EQ(m.variance(cls, feat), kVarianceFloor);
}

TEST(PredictProba, CentroidHitIsNearCertainAtLowTemperature) {
  std::mt19937_64 rng(223);
  const BlobData d = two_blobs(rng, 100, 0.3);
  const ClassifierModel m = train_classifier(d.features, d.labels, 2, 0.5);
  const std::vector<double> at_centroid{m.centroid(1, 0), m.centroid(1, 1),
                                        m.centroid(1, 2)};
  const auto p = predict_proba(m, at_centroid);
  EXPECT_GT(p[1], 0.99);
}

TEST(PredictProba, EquidistantPointSplitsEvenly) {
  ClassifierModel m;
  m.num_classes = 2;
  m.num_features = 1;
  m.centroids = {-1.0, 1.0};
  m.variances = {0.5, 0.5};
  const std::vector<double> midpoint{0.0};
  const auto p = predict_proba(m, midpoint);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(PredictProba, DimensionMismatchRejected) {
  ClassifierModel m;
  m.num_classes = 2;
  m.num_features = 2;
  m.centroids = {0, 0, 1, 1};
  m.variances = {1, 1, 1, 1};
  const std::vector<double> wrong{0.5};
  EXPECT_EQ(error_code_of([&] { predict_proba(m, wrong); }),
            ErrorCode::DimensionMismatch);
}

TEST(PredictProba, OutputsAreNormalizedAndPositive) {
  std::mt19937_64 rng(227);
  const BlobData d = two_blobs(rng, 50, 0.4);
  const ClassifierModel m = train_classifier(d.features, d.labels, 2);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int iter = 0; iter < 500; ++iter) {
    const std::vector<double> x{u(rng), u(rng), u(rng)};
    const auto p = predict_proba(m, x);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(PredictProba, InvariantUnderConsistentFeaturePermutation) {
  std::mt19937_64 rng(229);
  const BlobData d = two_blobs(rng, 60, 0.4);
  const ClassifierModel m = train_classifier(d.features, d.labels, 2);

  ClassifierModel permuted = m;
  const int perm[3] = {2, 0, 1};
  for (int cls = 0; cls < 2; ++cls)
    for (int f = 0; f < 3; ++f) {
      permuted.centroids[cls * 3 + perm[f]] = m.centroid(cls, f);
      permuted.variances[cls * 3 + perm[f]] = m.variance(cls, f);
    }
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int iter = 0; iter < 100; ++iter) {
    const std::vector<double> x{u(rng), u(rng), u(rng)};
    std::vector<double> px(3);
    for (int f = 0; f < 3; ++f) px[perm[f]] = x[f];
    const auto p1 = predict_proba(m, x);
    const auto p2 = predict_proba(permuted, px);
    for (int cls = 0; cls < 2; ++cls) EXPECT_NEAR(p1[cls], p2[cls], 1e-12);
  }
}

TEST(ClassifierIo, RoundTrip) {
  std::mt19937_64 rng(233);
  const BlobData d = two_blobs(rng, 30, 0.4);
  const ClassifierModel m = train_classifier(d.features, d.labels, 2, 3.5);
  testutil::TempDir dir("classifier");
  const auto path = dir.path() / "model.txt";
  write_classifier(m, path);
  const ClassifierModel back = read_classifier(path);
  EXPECT_EQ(back.num_classes, m.num_classes);
  EXPECT_EQ(back.num_features, m.num_features);
  EXPECT_DOUBLE_EQ(back.temperature, m.temperature);
  EXPECT_EQ(back.centroids, m.centroids);
  EXPECT_EQ(back.variances, m.variances);
}
