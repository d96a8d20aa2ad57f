#include <gtest/gtest.h>

#include <random>

#include "lcfuse/align.hpp"
#include "test_util.hpp"

using namespace lcfuse;
using testutil::error_code_of;
using testutil::random_distribution;

namespace {

ProbabilityRaster raster_with_map_classes(const GridGeometry& g, int num_classes,
                                          const std::vector<int>& classes) {
  ProbabilityRaster r(g, num_classes);
  for (std::int64_t i = 0; i < g.pixel_count(); ++i) {
    std::vector<double> p(static_cast<std::size_t>(num_classes),
                          0.1 / (num_classes - 1));
    p[classes[static_cast<std::size_t>(i)]] = 0.9;
    r.set_distribution(i, p);
  }
  return r;
}

}  // namespace

TEST(BuildGroupMap, NestedGridsGroupEverything) {
  GridGeometry fine{8, 8, 0, 0, 30, -30};
  GridGeometry coarse{1, 1, 0, 0, 240, -240};
  const GroupMap gm = build_group_map(fine, coarse);
  ASSERT_EQ(gm.members.size(), 1u);
  EXPECT_EQ(gm.members[0].size(), 64u);
  for (auto a : gm.assignment) EXPECT_EQ(a, 0);
}

TEST(BuildGroupMap, CenterContainmentSplitsUnevenGrids) {
  // centers at x = 50, 150, 250 against cells [0,150) and [150,300)
  GridGeometry fine{3, 1, 0, 0, 100, -100};
  GridGeometry coarse{2, 1, 0, 0, 150, -150};
  const GroupMap gm = build_group_map(fine, coarse);
  EXPECT_EQ(gm.assignment[0], 0);
  EXPECT_EQ(gm.assignment[1], 1);
  EXPECT_EQ(gm.assignment[2], 1);
  EXPECT_EQ(gm.members[0], (std::vector<std::int32_t>{0}));
  EXPECT_EQ(gm.members[1], (std::vector<std::int32_t>{1, 2}));
}

TEST(BuildGroupMap, AssignmentAndMembersAgree) {
  GridGeometry fine{17, 11, -40, 95, 7, -7};
  GridGeometry coarse{3, 2, -40, 95, 45, -45};
  const GroupMap gm = build_group_map(fine, coarse);
  for (std::size_t cell = 0; cell < gm.members.size(); ++cell)
    for (auto p : gm.members[cell])
      EXPECT_EQ(gm.assignment[static_cast<std::size_t>(p)],
                static_cast<std::int32_t>(cell));
  std::int64_t total = 0;
  for (const auto& m : gm.members) total += static_cast<std::int64_t>(m.size());
  std::int64_t assigned = 0;
  for (auto a : gm.assignment)
    if (a != kNoGroup) ++assigned;
  EXPECT_EQ(total, assigned);
}

TEST(BuildGroupMap, DisjointExtentsRejected) {
  GridGeometry fine{4, 4, 0, 0, 30, -30};
  GridGeometry coarse{2, 2, 10000, 10000, 240, -240};
  EXPECT_EQ(error_code_of([&] { build_group_map(fine, coarse); }),
            ErrorCode::EmptyOverlap);
}

TEST(GroupAgreement, UnanimousGroupScoresOne) {
  GridGeometry fine{2, 2, 0, 0, 30, -30};
  GridGeometry coarse{1, 1, 0, 0, 60, -60};
  const GroupMap gm = build_group_map(fine, coarse);
  const auto r = raster_with_map_classes(fine, 3, {2, 2, 2, 2});
  const BandRaster g = group_agreement(r, gm);
  for (std::int64_t i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(g.value(i, 0), 1.0f);
}

TEST(GroupAgreement, SplitGroupScoresHalf) {
  GridGeometry fine{2, 2, 0, 0, 30, -30};
  GridGeometry coarse{1, 1, 0, 0, 60, -60};
  const GroupMap gm = build_group_map(fine, coarse);
  const auto r = raster_with_map_classes(fine, 3, {1, 1, 2, 2});
  const BandRaster g = group_agreement(r, gm);
  for (std::int64_t i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(g.value(i, 0), 0.5f);
}

TEST(GroupAgreement, UngroupedPixelScoresZeroAndInvalidStaysNodata) {
  // coarse covers only the left column of a 2x1 fine grid
  GridGeometry fine{2, 1, 0, 0, 30, -30};
  GridGeometry coarse{1, 1, 0, 0, 30, -30};
  const GroupMap gm = build_group_map(fine, coarse);
  ProbabilityRaster r(fine, 2);
  const double p[] = {0.8, 0.2};
  r.set_distribution(0, p);
  r.set_distribution(1, p);
  BandRaster g = group_agreement(r, gm);
  EXPECT_FLOAT_EQ(g.value(0, 0), 1.0f);
  EXPECT_FLOAT_EQ(g.value(1, 0), 0.0f);  // outside the coarse extent

  r.set_invalid(1);
  g = group_agreement(r, gm);
  EXPECT_TRUE(BandRaster::is_nodata(g.value(1, 0)));
}

TEST(GroupAgreement, InvariantUnderArgmaxPreservingRescale) {
  GridGeometry fine{4, 4, 0, 0, 30, -30};
  GridGeometry coarse{2, 2, 0, 0, 60, -60};
  const GroupMap gm = build_group_map(fine, coarse);
  std::mt19937_64 rng(71);
  std::vector<int> classes(16);
  for (auto& c : classes) c = static_cast<int>(rng() % 4);
  const auto r1 = raster_with_map_classes(fine, 4, classes);

  // different probabilities, same argmax per pixel
  ProbabilityRaster r2(fine, 4);
  for (std::int64_t i = 0; i < 16; ++i) {
    std::vector<double> p(4, 0.2);
    p[classes[static_cast<std::size_t>(i)]] = 0.4;
    r2.set_distribution(i, p);
  }
  const BandRaster g1 = group_agreement(r1, gm);
  const BandRaster g2 = group_agreement(r2, gm);
  for (std::int64_t i = 0; i < 16; ++i)
    EXPECT_FLOAT_EQ(g1.value(i, 0), g2.value(i, 0));
}

TEST(GroupAgreement, ScoresTimesGroupSizeAreCounts) {
  GridGeometry fine{6, 6, 0, 0, 30, -30};
  GridGeometry coarse{2, 2, 0, 0, 90, -90};
  const GroupMap gm = build_group_map(fine, coarse);
  std::mt19937_64 rng(73);
  std::vector<int> classes(36);
  for (auto& c : classes) c = static_cast<int>(rng() % 3);
  const BandRaster g = group_agreement(raster_with_map_classes(fine, 3, classes), gm);
  for (std::size_t cell = 0; cell < gm.members.size(); ++cell) {
    const double size = static_cast<double>(gm.members[cell].size());
    for (auto p : gm.members[cell]) {
      const double count = g.value(p, 0) * size;
      EXPECT_NEAR(count, std::round(count), 1e-5);
    }
  }
}

TEST(GroupAgreement, GeometryMismatchRejected) {
  GridGeometry fine{4, 4, 0, 0, 30, -30};
  GridGeometry coarse{2, 2, 0, 0, 60, -60};
  const GroupMap gm = build_group_map(fine, coarse);
  ProbabilityRaster wrong(GridGeometry{5, 4, 0, 0, 30, -30}, 3);
  EXPECT_EQ(error_code_of([&] { group_agreement(wrong, gm); }),
            ErrorCode::GeometryMismatch);
}

TEST(ReliabilityWeight, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(reliability_weight({1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(reliability_weight({0.0, 0.5}), 0.0);
  EXPECT_DOUBLE_EQ(reliability_weight({0.0, 1.0}), 0.0);  // 0/0 resolves to 0
  EXPECT_NEAR(reliability_weight({0.5, 0.0}), 1.0 / 3.0, 1e-12);
}

TEST(ReliabilityWeight, BoundedAndMonotone) {
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int iter = 0; iter < 1000; ++iter) {
    const double g = u(rng);
    const double m = u(rng);
    const double w = reliability_weight({g, m});
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
    const double dg = std::min(1.0, g + 0.01);
    const double dm = std::min(1.0, m + 0.01);
    EXPECT_GE(reliability_weight({dg, m}), w - 1e-12);  // nondecreasing in g
    EXPECT_GE(reliability_weight({g, dm}), w - 1e-12);  // nondecreasing in m
  }
}

TEST(ReliabilityWeight, OutOfRangeRejected) {
  EXPECT_EQ(error_code_of([&] { reliability_weight({1.2, 0.0}); }),
            ErrorCode::InvalidArgument);
}

TEST(GroupMapIo, RoundTrip) {
  testutil::TempDir dir("groups");
  GridGeometry fine{5, 3, 0, 0, 30, -30};
  GridGeometry coarse{2, 1, 0, 0, 90, -90};
  const GroupMap gm = build_group_map(fine, coarse);
  const auto path = dir.path() / "g.lcr";
  write_group_map(gm, path);
  const GroupMap back = read_group_map(path);
  EXPECT_EQ(back.fine_geometry, gm.fine_geometry);
  EXPECT_EQ(back.coarse_geometry, gm.coarse_geometry);
  EXPECT_EQ(back.assignment, gm.assignment);
  EXPECT_EQ(back.members, gm.members);
}
