#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lcfuse/error.hpp"
#include "lcfuse/raster.hpp"

namespace lcfuse {

/// (nir - red) / (nir + red); nodata where the denominator vanishes or an
/// input is nodata.
inline BandRaster ndvi(const BandRaster& red, int red_band, const BandRaster& nir,
                       int nir_band) {
  require(red.geometry == nir.geometry, ErrorCode::GeometryMismatch,
          "red and nir bands on different grids");
  require(red_band >= 0 && red_band < red.num_bands && nir_band >= 0 &&
              nir_band < nir.num_bands,
          ErrorCode::InvalidArgument, "band index out of range");
  BandRaster out(red.geometry, 1);
  for (std::int64_t i = 0; i < red.pixel_count(); ++i) {
    const float r = red.value(i, red_band);
    const float n = nir.value(i, nir_band);
    if (BandRaster::is_nodata(r) || BandRaster::is_nodata(n) || n + r == 0.0f) continue;
    out.value(i, 0) = (n - r) / (n + r);
  }
  return out;
}

inline BandRaster ndvi(const BandRaster& bands, int red_band, int nir_band) {
  return ndvi(bands, red_band, bands, nir_band);
}

struct GlcmParams {
  int grey_levels = 16;
  int window_size = 7;
  int offset_dx = 1;
  int offset_dy = 1;

  void validate() const {
    require(grey_levels >= 2, ErrorCode::InvalidArgument, "grey_levels must be >= 2");
    require(window_size >= 3 && window_size % 2 == 1, ErrorCode::InvalidArgument,
            "window_size must be odd and >= 3");
  }
};

/// Windowed co-occurrence textures: bands are (mean, contrast, entropy).
///
/// The band is quantized once with a global min-max linear map to
/// grey_levels bins. For each pixel whose window fits inside the image, the
/// directed co-occurrence matrix of (bin at p, bin at p+offset) pairs within
/// the window is normalized to probabilities p(i,j), and
///   mean     = sum i * p(i,j)
///   contrast = sum (i-j)^2 * p(i,j)
///   entropy  = -sum p(i,j) * ln p(i,j),  0 ln 0 = 0.
/// Border pixels and windows with no valid pair are nodata.
inline BandRaster glcm_textures(const BandRaster& band, int band_index,
                                const GlcmParams& params) {
  params.validate();
  require(band_index >= 0 && band_index < band.num_bands, ErrorCode::InvalidArgument,
          "band index out of range");
  const int w = band.geometry.width;
  const int h = band.geometry.height;
  require(params.window_size <= w && params.window_size <= h,
          ErrorCode::WindowTooLarge, "window exceeds image dimensions");

  // Global quantization range over finite values.
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (std::int64_t i = 0; i < band.pixel_count(); ++i) {
    const float v = band.value(i, band_index);
    if (BandRaster::is_nodata(v) || !std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  const int levels = params.grey_levels;
  std::vector<int> bins(static_cast<std::size_t>(band.pixel_count()), -1);
  for (std::int64_t i = 0; i < band.pixel_count(); ++i) {
    const float v = band.value(i, band_index);
    if (BandRaster::is_nodata(v) || !std::isfinite(v)) continue;
    if (hi <= lo) {
      bins[static_cast<std::size_t>(i)] = 0;
    } else {
      int b = static_cast<int>((v - lo) / (hi - lo) * levels);
      bins[static_cast<std::size_t>(i)] = std::clamp(b, 0, levels - 1);
    }
  }

  BandRaster out(band.geometry, 3);
  const int half = params.window_size / 2;
  const int dx = params.offset_dx;
  const int dy = params.offset_dy;
  std::vector<double> cooc(static_cast<std::size_t>(levels) * levels);

  for (int row = half; row < h - half; ++row) {
    for (int col = half; col < w - half; ++col) {
      std::fill(cooc.begin(), cooc.end(), 0.0);
      double total = 0.0;
      for (int wy = row - half; wy <= row + half; ++wy) {
        for (int wx = col - half; wx <= col + half; ++wx) {
          const int px = wx + dx;
          const int py = wy + dy;
          // partner must stay inside the window
          if (px < col - half || px > col + half || py < row - half || py > row + half)
            continue;
          const int bi = bins[static_cast<std::size_t>(wy) * w + wx];
          const int bj = bins[static_cast<std::size_t>(py) * w + px];
          if (bi < 0 || bj < 0) continue;
          cooc[static_cast<std::size_t>(bi) * levels + bj] += 1.0;
          total += 1.0;
        }
      }
      if (total == 0.0) continue;
      double mean = 0.0, contrast = 0.0, entropy = 0.0;
      for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
          const double p = cooc[static_cast<std::size_t>(i) * levels + j] / total;
          if (p == 0.0) continue;
          mean += i * p;
          contrast += double(i - j) * (i - j) * p;
          entropy -= p * std::log(p);
        }
      }
      const std::int64_t idx = static_cast<std::int64_t>(row) * w + col;
      out.value(idx, 0) = static_cast<float>(mean);
      out.value(idx, 1) = static_cast<float>(contrast);
      out.value(idx, 2) = static_cast<float>(entropy);
    }
  }
  return out;
}

namespace detail {

// Least-squares polynomial smoothing weights. Row r holds the window weights
// that evaluate the fitted polynomial at offset tau = r - half; the center
// row is the classic symmetric filter.
inline Eigen::MatrixXd savgol_weights(int window, int poly_order) {
  const int half = window / 2;
  Eigen::MatrixXd vand(window, poly_order + 1);
  for (int i = 0; i < window; ++i) {
    double t = i - half;
    double p = 1.0;
    for (int j = 0; j <= poly_order; ++j) {
      vand(i, j) = p;
      p *= t;
    }
  }
  // (V^T V)^-1 V^T, then one evaluation row per tau.
  Eigen::MatrixXd proj =
      (vand.transpose() * vand).ldlt().solve(vand.transpose());
  Eigen::MatrixXd weights(window, window);
  for (int r = 0; r < window; ++r) {
    const double tau = r - half;
    Eigen::RowVectorXd eval(poly_order + 1);
    double p = 1.0;
    for (int j = 0; j <= poly_order; ++j) {
      eval(j) = p;
      p *= tau;
    }
    weights.row(r) = eval * proj;
  }
  return weights;
}

}  // namespace detail

/// Gap-fills a series by linear interpolation (flat at the ends), then
/// applies Savitzky-Golay smoothing. Boundary samples are smoothed by
/// evaluating the polynomial fitted to the first/last full window at their
/// position, so the filter reproduces polynomials of degree <= poly_order
/// over the whole series.
inline std::vector<double> savitzky_golay_smooth(std::span<const double> series,
                                                 std::span<const std::uint8_t> missing,
                                                 int window, int poly_order) {
  const int n = static_cast<int>(series.size());
  require(missing.size() == series.size(), ErrorCode::InvalidArgument,
          "series and missing mask lengths differ");
  require(window >= 1 && window % 2 == 1, ErrorCode::InvalidArgument,
          "window must be odd");
  require(poly_order >= 0 && poly_order < window, ErrorCode::InvalidArgument,
          "poly_order must be < window");
  require(window <= n, ErrorCode::InvalidArgument, "window exceeds series length");

  int present = 0;
  for (int i = 0; i < n; ++i)
    if (!missing[i]) ++present;
  require(present >= 2, ErrorCode::InsufficientData,
          "need at least 2 non-missing epochs");

  // Fill gaps.
  std::vector<double> filled(series.begin(), series.end());
  int prev = -1;
  for (int i = 0; i < n; ++i) {
    if (missing[i]) continue;
    if (prev < 0) {
      for (int k = 0; k < i; ++k) filled[k] = series[i];  // flat start
    } else if (prev + 1 < i) {
      for (int k = prev + 1; k < i; ++k) {
        const double a = double(k - prev) / double(i - prev);
        filled[k] = series[prev] + a * (series[i] - series[prev]);
      }
    }
    prev = i;
  }
  for (int k = prev + 1; k < n; ++k) filled[k] = series[prev];  // flat end

  const Eigen::MatrixXd weights = detail::savgol_weights(window, poly_order);
  const int half = window / 2;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    int start;
    int row;
    if (t < half) {
      start = 0;
      row = t;
    } else if (t >= n - half) {
      start = n - window;
      row = t - start;
    } else {
      start = t - half;
      row = half;
    }
    double acc = 0.0;
    for (int i = 0; i < window; ++i) acc += weights(row, i) * filled[start + i];
    out[static_cast<std::size_t>(t)] = acc;
  }
  return out;
}

/// Fraction of missing epochs in a series mask.
inline double missing_fraction(std::span<const std::uint8_t> missing) {
  require(!missing.empty(), ErrorCode::InvalidArgument, "empty series");
  std::int64_t count = 0;
  for (auto m : missing)
    if (m) ++count;
  return static_cast<double>(count) / static_cast<double>(missing.size());
}

/// Per-pixel missing fraction of a time-series stack, as a 1-band raster.
inline BandRaster missing_fraction_raster(const TimeSeriesStack& stack) {
  BandRaster out(stack.geometry, 1);
  for (std::int64_t i = 0; i < stack.pixel_count(); ++i) {
    std::span<const std::uint8_t> m(stack.missing.data() + i * stack.num_epochs,
                                    static_cast<std::size_t>(stack.num_epochs));
    out.value(i, 0) = static_cast<float>(missing_fraction(m));
  }
  return out;
}

/// Applies savitzky_golay_smooth to every channel of every pixel.
inline TimeSeriesStack smooth_stack(const TimeSeriesStack& stack, int window,
                                    int poly_order) {
  TimeSeriesStack out(stack.geometry, stack.num_epochs, stack.num_channels);
  out.missing = stack.missing;
  std::vector<double> series(static_cast<std::size_t>(stack.num_epochs));
  for (std::int64_t i = 0; i < stack.pixel_count(); ++i) {
    std::span<const std::uint8_t> miss(stack.missing.data() + i * stack.num_epochs,
                                       static_cast<std::size_t>(stack.num_epochs));
    int present = 0;
    for (auto m : miss)
      if (!m) ++present;
    if (present < 2) {
      // nothing to interpolate from; pass the pixel through
      for (int ch = 0; ch < stack.num_channels; ++ch)
        for (int t = 0; t < stack.num_epochs; ++t)
          out.value(i, t, ch) = stack.value(i, t, ch);
      continue;
    }
    for (int ch = 0; ch < stack.num_channels; ++ch) {
      for (int t = 0; t < stack.num_epochs; ++t) series[t] = stack.value(i, t, ch);
      auto smoothed = savitzky_golay_smooth(series, miss, window, poly_order);
      for (int t = 0; t < stack.num_epochs; ++t)
        out.value(i, t, ch) = static_cast<float>(smoothed[t]);
    }
  }
  return out;
}

}  // namespace lcfuse
