#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lcfuse/assess.hpp"
#include "test_util.hpp"

using namespace lcfuse;
using testutil::error_code_of;

namespace {

// Accuracy-table fixtures for a 7-class and a 4-class assessment, with the
// published percentages they must reproduce.
ConfusionMatrix seven_class_fixture() {
  ConfusionMatrix cm(7);
  const std::int64_t counts[7][7] = {
      {93, 4, 5, 6, 0, 8, 0},   {9, 97, 0, 21, 0, 0, 0}, {2, 0, 1, 1, 0, 0, 0},
      {2, 33, 0, 46, 0, 0, 0},  {0, 0, 0, 0, 9, 0, 0},   {8, 0, 3, 0, 0, 75, 2},
      {3, 1, 0, 4, 2, 0, 4},
  };
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) cm.at(i, j) = counts[i][j];
  return cm;
}

ConfusionMatrix four_class_fixture() {
  ConfusionMatrix cm(4);
  const std::int64_t counts[4][4] = {
      {179, 36, 6, 17},
      {2, 67, 1, 0},
      {0, 0, 52, 0},
      {4, 0, 6, 53},
  };
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) cm.at(i, j) = counts[i][j];
  return cm;
}

LabelRaster map_of(const GridGeometry& g, const std::vector<int>& labels, int classes) {
  LabelRaster r(g, classes);
  for (std::size_t i = 0; i < labels.size(); ++i)
    r.labels[i] = static_cast<std::uint8_t>(labels[i]);
  return r;
}

}  // namespace

TEST(Score, PerfectMapGivesDiagonalMatrix) {
  GridGeometry g{2, 2, 0, 0, 30, -30};
  const LabelRaster map = map_of(g, {0, 1, 2, 1}, 3);
  SampleSet s;
  for (int i = 0; i < 4; ++i)
    s.points.push_back({g.pixel_center_x(i % 2), g.pixel_center_y(i / 2),
                        map.labels[static_cast<std::size_t>(i)],
                        SampleSplit::Validation});
  const ConfusionMatrix cm = score(map, s);
  EXPECT_EQ(cm.total(), 4);
  EXPECT_EQ(cm.trace(), 4);
  EXPECT_DOUBLE_EQ(overall_accuracy(cm), 1.0);
}

TEST(Score, DirectTallyAndTrainExclusion) {
  GridGeometry g{3, 1, 0, 0, 30, -30};
  const LabelRaster map = map_of(g, {0, 1, 1}, 2);
  SampleSet s;
  s.points.push_back({g.pixel_center_x(0), g.pixel_center_y(0), 0, SampleSplit::Validation});
  s.points.push_back({g.pixel_center_x(1), g.pixel_center_y(0), 0, SampleSplit::Validation});
  s.points.push_back({g.pixel_center_x(2), g.pixel_center_y(0), 1, SampleSplit::Validation});
  s.points.push_back({g.pixel_center_x(0), g.pixel_center_y(0), 1, SampleSplit::Train});
  const ConfusionMatrix cm = score(map, s);
  EXPECT_EQ(cm.at(0, 0), 1);
  EXPECT_EQ(cm.at(0, 1), 0);
  EXPECT_EQ(cm.at(1, 0), 1);
  EXPECT_EQ(cm.at(1, 1), 1);
  EXPECT_EQ(cm.total(), 3);  // the training point is ignored
}

TEST(Score, OffGridSampleRejected) {
  GridGeometry g{2, 2, 0, 0, 30, -30};
  const LabelRaster map = map_of(g, {0, 0, 0, 0}, 2);
  SampleSet s;
  s.points.push_back({-10.0, -10.0, 0, SampleSplit::Validation});
  EXPECT_EQ(error_code_of([&] { score(map, s); }), ErrorCode::SampleOffGrid);
}

TEST(Score, NodataPredictionsTalliedSeparately) {
  GridGeometry g{2, 1, 0, 0, 30, -30};
  LabelRaster map = map_of(g, {0, 0}, 2);
  map.labels[1] = kNoDataLabel;
  SampleSet s;
  s.points.push_back({g.pixel_center_x(0), g.pixel_center_y(0), 0, SampleSplit::Validation});
  s.points.push_back({g.pixel_center_x(1), g.pixel_center_y(0), 0, SampleSplit::Validation});
  const ConfusionMatrix cm = score(map, s);
  EXPECT_EQ(cm.total(), 1);
  EXPECT_EQ(cm.nodata_predictions, 1);
}

TEST(Score, MaskFilterKeepsOnlyCloudAndShadowPixels) {
  GridGeometry g{3, 1, 0, 0, 30, -30};
  const LabelRaster map = map_of(g, {0, 1, 0}, 2);
  MaskRaster mask(g);
  mask.set_flag(1, MaskFlag::Cloud);
  mask.set_flag(2, MaskFlag::Shadow);
  SampleSet s;
  for (int i = 0; i < 3; ++i)
    s.points.push_back({g.pixel_center_x(i), g.pixel_center_y(0), 0,
                        SampleSplit::Validation});
  const ConfusionMatrix cm = score(map, s, &mask);
  EXPECT_EQ(cm.total(), 2);  // clear pixel 0 filtered out
  EXPECT_EQ(cm.at(1, 0), 1);
  EXPECT_EQ(cm.at(0, 0), 1);
}

TEST(Score, OrderInvariant) {
  std::mt19937_64 rng(241);
  GridGeometry g{8, 8, 0, 0, 30, -30};
  std::vector<int> labels(64);
  for (auto& l : labels) l = static_cast<int>(rng() % 3);
  const LabelRaster map = map_of(g, labels, 3);
  SampleSet s;
  for (int i = 0; i < 64; ++i)
    s.points.push_back({g.pixel_center_x(i % 8), g.pixel_center_y(i / 8),
                        static_cast<int>(rng() % 3), SampleSplit::Validation});
  const ConfusionMatrix a = score(map, s);
  std::shuffle(s.points.begin(), s.points.end(), rng);
  const ConfusionMatrix b = score(map, s);
  EXPECT_EQ(a.counts, b.counts);
}

TEST(Accuracy, SevenClassFixtureReproducesPublishedNumbers) {
  const ConfusionMatrix cm = seven_class_fixture();
  EXPECT_EQ(cm.total(), 439);
  EXPECT_EQ(cm.trace(), 325);
  EXPECT_EQ(format_percent_1dp(overall_accuracy(cm)), "74.0");

  const auto acc = class_accuracies(cm);
  const long expected_ua[7] = {80, 76, 25, 57, 100, 85, 29};
  const long expected_pa[7] = {79, 72, 11, 59, 82, 90, 67};
  for (int i = 0; i < 7; ++i) {
    ASSERT_TRUE(acc[i].user.has_value());
    ASSERT_TRUE(acc[i].producer.has_value());
    EXPECT_EQ(percent_int(*acc[i].user), expected_ua[i]) << "class " << i;
    EXPECT_EQ(percent_int(*acc[i].producer), expected_pa[i]) << "class " << i;
  }
}

TEST(Accuracy, FourClassFixtureReproducesPublishedNumbers) {
  const ConfusionMatrix cm = four_class_fixture();
  EXPECT_EQ(cm.total(), 423);
  EXPECT_EQ(cm.trace(), 351);
  EXPECT_EQ(format_percent_1dp(overall_accuracy(cm)), "83.0");

  const auto acc = class_accuracies(cm);
  const long expected_ua[4] = {75, 96, 100, 84};
  const long expected_pa[4] = {97, 65, 80, 76};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(percent_int(*acc[i].user), expected_ua[i]) << "class " << i;
    EXPECT_EQ(percent_int(*acc[i].producer), expected_pa[i]) << "class " << i;
  }
}

TEST(Accuracy, AbsentClassReportsNoValue) {
  ConfusionMatrix cm(3);
  cm.at(0, 0) = 5;
  cm.at(0, 1) = 1;
  cm.at(1, 1) = 4;
  const auto acc = class_accuracies(cm);
  EXPECT_TRUE(acc[0].user.has_value());
  EXPECT_FALSE(acc[2].user.has_value());
  EXPECT_FALSE(acc[2].producer.has_value());
}

TEST(Accuracy, WeightedAccuraciesSumToTrace) {
  std::mt19937_64 rng(251);
  for (int iter = 0; iter < 50; ++iter) {
    ConfusionMatrix cm(4);
    for (auto& v : cm.counts) v = static_cast<std::int64_t>(rng() % 20);
    const auto acc = class_accuracies(cm);
    double ua_weighted = 0.0, pa_weighted = 0.0;
    for (int i = 0; i < 4; ++i) {
      if (acc[i].user) ua_weighted += *acc[i].user * cm.row_total(i);
      if (acc[i].producer) pa_weighted += *acc[i].producer * cm.col_total(i);
    }
    EXPECT_NEAR(ua_weighted, static_cast<double>(cm.trace()), 1e-9);
    EXPECT_NEAR(pa_weighted, static_cast<double>(cm.trace()), 1e-9);
  }
}

TEST(Accuracy, OverallAccuracyIsOneOnlyForDiagonal) {
  ConfusionMatrix cm(2);
  cm.at(0, 0) = 3;
  cm.at(1, 1) = 2;
  EXPECT_DOUBLE_EQ(overall_accuracy(cm), 1.0);
  cm.at(0, 1) = 1;
  EXPECT_LT(overall_accuracy(cm), 1.0);
}

TEST(Accuracy, EmptyMatrixRejected) {
  const ConfusionMatrix cm(3);
  EXPECT_EQ(error_code_of([&] { overall_accuracy(cm); }), ErrorCode::EmptyMatrix);
}

TEST(Formatting, TableCarriesTheHeadlineNumbers) {
  const std::string table = format_confusion_table(
      seven_class_fixture(), {"CR", "FR", "GR", "SHR", "WB", "IMP", "BL"});
  EXPECT_NE(table.find("overall accuracy: 74.0%"), std::string::npos);
  EXPECT_NE(table.find("CR"), std::string::npos);
  EXPECT_NE(table.find("100"), std::string::npos);  // waterbodies user accuracy

  const std::string csv = format_confusion_csv(four_class_fixture());
  EXPECT_NE(csv.find("overall_accuracy"), std::string::npos);
}

TEST(Merge, AddsCountsAndNodataTallies) {
  ConfusionMatrix a(2), b(2);
  a.at(0, 0) = 2;
  a.nodata_predictions = 1;
  b.at(1, 0) = 3;
  b.nodata_predictions = 2;
  a.merge(b);
  EXPECT_EQ(a.at(0, 0), 2);
  EXPECT_EQ(a.at(1, 0), 3);
  EXPECT_EQ(a.nodata_predictions, 3);
}
