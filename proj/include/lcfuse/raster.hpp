#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lcfuse/error.hpp"

namespace lcfuse {

constexpr std::uint8_t kNoDataLabel = 255;
constexpr double kProbabilitySumTolerance = 1e-6;

/// Affine north-up-style grid. origin_* is the map coordinate of the
/// upper-left corner of pixel (0,0); pixel_size_y is negative for the
/// usual north-up orientation.
struct GridGeometry {
  int width = 0;
  int height = 0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_size_x = 1.0;
  double pixel_size_y = -1.0;

  bool operator==(const GridGeometry&) const = default;

  std::int64_t pixel_count() const {
    return static_cast<std::int64_t>(width) * height;
  }

  void validate() const {
    require(width >= 1 && height >= 1, ErrorCode::InvalidArgument,
            "grid must be at least 1x1");
    require(pixel_size_x != 0.0 && pixel_size_y != 0.0,
            ErrorCode::InvalidArgument, "pixel sizes must be nonzero");
  }

  double pixel_center_x(int col) const { return origin_x + (col + 0.5) * pixel_size_x; }
  double pixel_center_y(int row) const { return origin_y + (row + 0.5) * pixel_size_y; }

  // Pixel whose half-open cell contains the map point; may be out of bounds.
  int map_to_col(double x) const {
    return static_cast<int>(std::floor((x - origin_x) / pixel_size_x));
  }
  int map_to_row(double y) const {
    return static_cast<int>(std::floor((y - origin_y) / pixel_size_y));
  }
  bool contains(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }
};

/// Per-pixel distribution over num_classes classes, class-interleaved.
/// Invalid pixels carry an all-NaN distribution and valid[i] == 0.
struct ProbabilityRaster {
  GridGeometry geometry;
  int num_classes = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> valid;

  ProbabilityRaster() = default;
  ProbabilityRaster(GridGeometry g, int classes) : geometry(g), num_classes(classes) {
    g.validate();
    require(classes >= 1, ErrorCode::InvalidArgument, "need at least one class");
    data.assign(static_cast<std::size_t>(g.pixel_count()) * classes,
                std::numeric_limits<float>::quiet_NaN());
    valid.assign(static_cast<std::size_t>(g.pixel_count()), 0);
  }

  std::int64_t pixel_count() const { return geometry.pixel_count(); }

  const float* pixel(std::int64_t i) const { return data.data() + i * num_classes; }
  float* pixel(std::int64_t i) { return data.data() + i * num_classes; }
  bool is_valid(std::int64_t i) const { return valid[static_cast<std::size_t>(i)] != 0; }

  void set_distribution(std::int64_t i, std::span<const double> p) {
    float* out = pixel(i);
    for (int c = 0; c < num_classes; ++c) out[c] = static_cast<float>(p[c]);
    valid[static_cast<std::size_t>(i)] = 1;
  }
  void set_invalid(std::int64_t i) {
    float* out = pixel(i);
    for (int c = 0; c < num_classes; ++c) out[c] = std::numeric_limits<float>::quiet_NaN();
    valid[static_cast<std::size_t>(i)] = 0;
  }
};

/// Per-pixel class index in [0, num_classes) or kNoDataLabel.
struct LabelRaster {
  GridGeometry geometry;
  int num_classes = 0;
  std::vector<std::uint8_t> labels;

  LabelRaster() = default;
  LabelRaster(GridGeometry g, int classes) : geometry(g), num_classes(classes) {
    g.validate();
    require(classes >= 1 && classes < kNoDataLabel, ErrorCode::InvalidArgument,
            "class count out of range");
    labels.assign(static_cast<std::size_t>(g.pixel_count()), kNoDataLabel);
  }

  std::int64_t pixel_count() const { return geometry.pixel_count(); }
};

/// Multi-band value raster (reflectance, fractions, weights...), band-interleaved.
struct BandRaster {
  GridGeometry geometry;
  int num_bands = 0;
  std::vector<float> data;

  BandRaster() = default;
  BandRaster(GridGeometry g, int bands, float fill = std::numeric_limits<float>::quiet_NaN())
      : geometry(g), num_bands(bands) {
    g.validate();
    require(bands >= 1, ErrorCode::InvalidArgument, "need at least one band");
    data.assign(static_cast<std::size_t>(g.pixel_count()) * bands, fill);
  }

  std::int64_t pixel_count() const { return geometry.pixel_count(); }

  float value(std::int64_t i, int band) const { return data[i * num_bands + band]; }
  float& value(std::int64_t i, int band) { return data[i * num_bands + band]; }

  static bool is_nodata(float v) { return std::isnan(v); }
  static float nodata() { return std::numeric_limits<float>::quiet_NaN(); }
};

enum class MaskFlag : std::uint8_t { Clear = 0, Cloud = 1, Shadow = 2, NoData = 3 };

inline bool is_cloud_or_shadow(MaskFlag f) {
  return f == MaskFlag::Cloud || f == MaskFlag::Shadow;
}

struct MaskRaster {
  GridGeometry geometry;
  std::vector<std::uint8_t> flags;

  MaskRaster() = default;
  explicit MaskRaster(GridGeometry g, MaskFlag fill = MaskFlag::Clear) : geometry(g) {
    g.validate();
    flags.assign(static_cast<std::size_t>(g.pixel_count()),
                 static_cast<std::uint8_t>(fill));
  }

  std::int64_t pixel_count() const { return geometry.pixel_count(); }
  MaskFlag flag(std::int64_t i) const { return static_cast<MaskFlag>(flags[i]); }
  void set_flag(std::int64_t i, MaskFlag f) { flags[i] = static_cast<std::uint8_t>(f); }
};

/// Per-pixel time series over num_epochs epochs and num_channels channels.
/// Values are pixel-major, epoch-major, channel-minor. A missing epoch is
/// missing for all channels of that pixel.
struct TimeSeriesStack {
  GridGeometry geometry;
  int num_epochs = 0;
  int num_channels = 0;
  std::vector<float> values;          // pixel_count * num_epochs * num_channels
  std::vector<std::uint8_t> missing;  // pixel_count * num_epochs

  TimeSeriesStack() = default;
  TimeSeriesStack(GridGeometry g, int epochs, int channels)
      : geometry(g), num_epochs(epochs), num_channels(channels) {
    g.validate();
    require(epochs >= 1 && channels >= 1, ErrorCode::InvalidArgument,
            "need at least one epoch and one channel");
    values.assign(static_cast<std::size_t>(g.pixel_count()) * epochs * channels, 0.0f);
    missing.assign(static_cast<std::size_t>(g.pixel_count()) * epochs, 0);
  }

  std::int64_t pixel_count() const { return geometry.pixel_count(); }

  float value(std::int64_t i, int epoch, int channel) const {
    return values[(i * num_epochs + epoch) * num_channels + channel];
  }
  float& value(std::int64_t i, int epoch, int channel) {
    return values[(i * num_epochs + epoch) * num_channels + channel];
  }
  bool is_missing(std::int64_t i, int epoch) const {
    return missing[i * num_epochs + epoch] != 0;
  }
  void set_missing(std::int64_t i, int epoch, bool m) {
    missing[i * num_epochs + epoch] = m ? 1 : 0;
  }
};

enum class SampleSplit : std::uint8_t { Train = 0, Validation = 1 };

struct SamplePoint {
  double x = 0.0;
  double y = 0.0;
  int label = 0;
  SampleSplit split = SampleSplit::Train;
};

struct SampleSet {
  std::vector<SamplePoint> points;

  void validate(int num_classes) const {
    for (const auto& p : points) {
      require(std::isfinite(p.x) && std::isfinite(p.y), ErrorCode::InvalidArgument,
              "sample coordinates must be finite");
      require(p.label >= 0 && p.label < num_classes, ErrorCode::InvalidArgument,
              "sample label out of range");
    }
  }
};

/// Rescales a nonnegative vector to sum to one, preserving proportions.
/// Entries down to -1e-9 are treated as zero.
inline std::vector<double> normalize_distribution(std::span<const double> p) {
  std::vector<double> out(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : out) {
    require(!std::isnan(v), ErrorCode::DegenerateDistribution, "NaN entry");
    require(v >= -1e-9, ErrorCode::DegenerateDistribution, "negative entry");
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  require(sum > 0.0, ErrorCode::DegenerateDistribution, "sum must be positive");
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace lcfuse
