#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "lcfuse/features.hpp"
#include "test_util.hpp"

using namespace lcfuse;
using testutil::error_code_of;

namespace {

BandRaster make_band(int w, int h, const std::vector<float>& values) {
  GridGeometry g{w, h, 0, 0, 1, -1};
  BandRaster r(g, 1);
  r.data = values;
  return r;
}

// Independent co-occurrence reference: quantize with the same global-min-max
// rule, then literally enumerate window pairs and accumulate the three
// statistics. Kept deliberately naive.
struct RefTextures {
  double mean, contrast, entropy;
  bool valid;
};

RefTextures reference_glcm_at(const BandRaster& band, int col, int row,
                              const GlcmParams& p) {
  const int w = band.geometry.width;
  const int h = band.geometry.height;
  float lo = std::numeric_limits<float>::infinity();
  float hi = -lo;
  for (float v : band.data) {
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  auto bin = [&](int x, int y) -> int {
    const float v = band.data[static_cast<std::size_t>(y) * w + x];
    if (std::isnan(v)) return -1;
    if (hi <= lo) return 0;
    const int b = static_cast<int>((v - lo) / (hi - lo) * p.grey_levels);
    return std::min(std::max(b, 0), p.grey_levels - 1);
  };
  const int half = p.window_size / 2;
  RefTextures out{0, 0, 0, false};
  if (col < half || col >= w - half || row < half || row >= h - half) return out;
  std::map<std::pair<int, int>, double> counts;
  double total = 0;
  for (int y = row - half; y <= row + half; ++y)
    for (int x = col - half; x <= col + half; ++x) {
      const int px = x + p.offset_dx;
      const int py = y + p.offset_dy;
      if (px < col - half || px > col + half || py < row - half || py > row + half)
        continue;
      const int bi = bin(x, y);
      const int bj = bin(px, py);
      if (bi < 0 || bj < 0) continue;
      counts[{bi, bj}] += 1;
      total += 1;
    }
  if (total == 0) return out;
  out.valid = true;
  for (const auto& [key, count] : counts) {
    const double prob = count / total;
    out.mean += key.first * prob;
    out.contrast += double(key.first - key.second) * (key.first - key.second) * prob;
    out.entropy -= prob * std::log(prob);
  }
  return out;
}

std::vector<float> checkerboard(int w, int h) {
  std::vector<float> v(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      v[static_cast<std::size_t>(y) * w + x] = static_cast<float>((x + y) % 2);
  return v;
}

}  // namespace

TEST(Ndvi, DirectEvaluation) {
  BandRaster red = make_band(1, 1, {0.1f});
  BandRaster nir = make_band(1, 1, {0.5f});
  BandRaster out = ndvi(red, 0, nir, 0);
  EXPECT_NEAR(out.value(0, 0), (0.5 - 0.1) / (0.5 + 0.1), 1e-7);

  red = make_band(1, 1, {0.3f});
  nir = make_band(1, 1, {0.3f});
  EXPECT_FLOAT_EQ(ndvi(red, 0, nir, 0).value(0, 0), 0.0f);
}

TEST(Ndvi, SingularDenominatorAndNodata) {
  BandRaster zeros = make_band(2, 1, {0.0f, 0.2f});
  BandRaster other = make_band(2, 1, {0.0f, BandRaster::nodata()});
  BandRaster out = ndvi(zeros, 0, other, 0);
  EXPECT_TRUE(BandRaster::is_nodata(out.value(0, 0)));
  EXPECT_TRUE(BandRaster::is_nodata(out.value(1, 0)));
}

TEST(Ndvi, GeometryMismatchRejected) {
  BandRaster a = make_band(2, 1, {0.1f, 0.2f});
  BandRaster b = make_band(1, 2, {0.1f, 0.2f});
  EXPECT_EQ(error_code_of([&] { ndvi(a, 0, b, 0); }), ErrorCode::GeometryMismatch);
}

TEST(Ndvi, OutputBoundedWhereDefined) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> red(64), nir(64);
  for (auto& v : red) v = u(rng);
  for (auto& v : nir) v = u(rng);
  BandRaster out = ndvi(make_band(8, 8, red), 0, make_band(8, 8, nir), 0);
  for (std::int64_t i = 0; i < out.pixel_count(); ++i) {
    const float v = out.value(i, 0);
    if (BandRaster::is_nodata(v)) continue;
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Glcm, ConstantWindowHasZeroContrastAndEntropy) {
  BandRaster band = make_band(5, 5, std::vector<float>(25, 0.7f));
  GlcmParams p{4, 3, 1, 1};
  BandRaster out = glcm_textures(band, 0, p);
  const std::int64_t center = 2 * 5 + 2;
  EXPECT_FLOAT_EQ(out.value(center, 1), 0.0f);  // contrast
  EXPECT_FLOAT_EQ(out.value(center, 2), 0.0f);  // entropy
}

TEST(Glcm, CheckerboardDiagonalOffset) {
  // Diagonal neighbors of a unit checkerboard share a bin, so contrast is 0
  // and the two equally likely pairs give entropy ln 2.
  BandRaster band = make_band(5, 5, checkerboard(5, 5));
  GlcmParams p{2, 5, 1, 1};
  BandRaster out = glcm_textures(band, 0, p);
  const std::int64_t center = 2 * 5 + 2;
  EXPECT_NEAR(out.value(center, 0), 0.5, 1e-6);  // mean over bins {0,1}
  EXPECT_NEAR(out.value(center, 1), 0.0, 1e-12);
  EXPECT_NEAR(out.value(center, 2), std::log(2.0), 1e-6);

  // same structure at window 3 on a 4x4 board
  BandRaster small = make_band(4, 4, checkerboard(4, 4));
  GlcmParams p3{2, 3, 1, 1};
  BandRaster out3 = glcm_textures(small, 0, p3);
  const std::int64_t c3 = 1 * 4 + 1;
  EXPECT_NEAR(out3.value(c3, 1), 0.0, 1e-12);
  EXPECT_NEAR(out3.value(c3, 2), std::log(2.0), 1e-6);
}

TEST(Glcm, MatchesNaiveEnumerationOnRandomImages) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int iter = 0; iter < 5; ++iter) {
    std::vector<float> values(81);
    for (auto& v : values) v = u(rng);
    if (iter == 3) values[40] = BandRaster::nodata();
    BandRaster band = make_band(9, 9, values);
    GlcmParams p{8, iter % 2 == 0 ? 3 : 5, 1, 1};
    BandRaster out = glcm_textures(band, 0, p);
    for (int row = 0; row < 9; ++row)
      for (int col = 0; col < 9; ++col) {
        const RefTextures ref = reference_glcm_at(band, col, row, p);
        const std::int64_t i = static_cast<std::int64_t>(row) * 9 + col;
        if (!ref.valid) {
          EXPECT_TRUE(BandRaster::is_nodata(out.value(i, 0)));
          continue;
        }
        EXPECT_NEAR(out.value(i, 0), ref.mean, 1e-5);
        EXPECT_NEAR(out.value(i, 1), ref.contrast, 1e-4);
        EXPECT_NEAR(out.value(i, 2), ref.entropy, 1e-5);
      }
  }
}

TEST(Glcm, EntropyAndContrastBounds) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> values(144);
  for (auto& v : values) v = u(rng);
  BandRaster band = make_band(12, 12, values);
  GlcmParams p{16, 7, 1, 1};
  BandRaster out = glcm_textures(band, 0, p);
  const double max_entropy = 2.0 * std::log(16.0);
  for (std::int64_t i = 0; i < out.pixel_count(); ++i) {
    if (BandRaster::is_nodata(out.value(i, 1))) continue;
    EXPECT_GE(out.value(i, 1), 0.0f);
    EXPECT_GE(out.value(i, 2), 0.0f);
    EXPECT_LE(out.value(i, 2), max_entropy + 1e-6);
  }
}

TEST(Glcm, BorderRingIsNodataAndBigWindowRejected) {
  BandRaster band = make_band(8, 8, std::vector<float>(64, 0.5f));
  GlcmParams p{4, 5, 1, 1};
  BandRaster out = glcm_textures(band, 0, p);
  EXPECT_TRUE(BandRaster::is_nodata(out.value(0, 0)));
  EXPECT_TRUE(BandRaster::is_nodata(out.value(1 * 8 + 1, 0)));
  EXPECT_FALSE(BandRaster::is_nodata(out.value(2 * 8 + 2, 0)));

  GlcmParams too_big{4, 9, 1, 1};
  EXPECT_EQ(error_code_of([&] { glcm_textures(band, 0, too_big); }),
            ErrorCode::WindowTooLarge);
}

TEST(SavitzkyGolay, ConstantSeriesUnchanged) {
  const std::vector<double> series(5, 5.0);
  const std::vector<std::uint8_t> present(5, 0);
  const auto out = savitzky_golay_smooth(series, present, 5, 2);
  for (double v : out) EXPECT_NEAR(v, 5.0, 1e-12);
}

TEST(SavitzkyGolay, ReproducesPolynomialsUpToOrder) {
  std::vector<double> series(10);
  for (int t = 0; t < 10; ++t) series[t] = double(t) * t;
  const std::vector<std::uint8_t> present(10, 0);
  const auto out = savitzky_golay_smooth(series, present, 5, 2);
  for (int t = 0; t < 10; ++t) EXPECT_NEAR(out[t], series[t], 1e-9);
}

TEST(SavitzkyGolay, GapFillThenSmoothKeepsALine) {
  const std::vector<double> series = {1.0, 0.0, 3.0, 0.0, 5.0};
  const std::vector<std::uint8_t> missing = {0, 1, 0, 1, 0};
  const auto out = savitzky_golay_smooth(series, missing, 3, 1);
  const double expected[] = {1, 2, 3, 4, 5};  // interpolation gives the line back
  for (int t = 0; t < 5; ++t) EXPECT_NEAR(out[t], expected[t], 1e-9);
}

TEST(SavitzkyGolay, Linearity) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const int n = 16;
  std::vector<double> x(n), y(n), mix(n);
  const std::vector<std::uint8_t> present(n, 0);
  for (int i = 0; i < n; ++i) {
    x[i] = u(rng);
    y[i] = u(rng);
    mix[i] = 2.5 * x[i] - 1.25 * y[i];
  }
  const auto sx = savitzky_golay_smooth(x, present, 7, 3);
  const auto sy = savitzky_golay_smooth(y, present, 7, 3);
  const auto sm = savitzky_golay_smooth(mix, present, 7, 3);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(sm[i], 2.5 * sx[i] - 1.25 * sy[i], 1e-9);
}

TEST(SavitzkyGolay, TooFewPresentEpochsRejected) {
  const std::vector<double> series = {1.0, 2.0, 3.0};
  const std::vector<std::uint8_t> missing = {0, 1, 1};
  EXPECT_EQ(error_code_of([&] { savitzky_golay_smooth(series, missing, 3, 1); }),
            ErrorCode::InsufficientData);
}

TEST(MissingFraction, CountsMissingEpochs) {
  std::vector<std::uint8_t> none(10, 0);
  EXPECT_DOUBLE_EQ(missing_fraction(none), 0.0);
  std::vector<std::uint8_t> all(10, 1);
  EXPECT_DOUBLE_EQ(missing_fraction(all), 1.0);
  std::vector<std::uint8_t> some(24, 0);
  for (int i = 0; i < 6; ++i) some[i * 4] = 1;
  EXPECT_DOUBLE_EQ(missing_fraction(some), 0.25);
}
