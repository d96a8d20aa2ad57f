#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lcfuse/error.hpp"
#include "lcfuse/raster.hpp"

namespace lcfuse {

/// Row-major count matrix: counts[predicted][reference]. Rows are the
/// classification, columns the ground reference.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;
  std::int64_t nodata_predictions = 0;  // samples on nodata map pixels, not scored

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int classes) : num_classes(classes) {
    require(classes >= 1, ErrorCode::InvalidArgument, "need at least one class");
    counts.assign(static_cast<std::size_t>(classes) * classes, 0);
  }

  std::int64_t& at(int predicted, int reference) {
    return counts[static_cast<std::size_t>(predicted) * num_classes + reference];
  }
  std::int64_t at(int predicted, int reference) const {
    return counts[static_cast<std::size_t>(predicted) * num_classes + reference];
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto v : counts) t += v;
    return t;
  }
  std::int64_t trace() const {
    std::int64_t t = 0;
    for (int i = 0; i < num_classes; ++i) t += at(i, i);
    return t;
  }
  std::int64_t row_total(int i) const {
    std::int64_t t = 0;
    for (int j = 0; j < num_classes; ++j) t += at(i, j);
    return t;
  }
  std::int64_t col_total(int j) const {
    std::int64_t t = 0;
    for (int i = 0; i < num_classes; ++i) t += at(i, j);
    return t;
  }

  void merge(const ConfusionMatrix& other) {
    require(other.num_classes == num_classes, ErrorCode::DimensionMismatch,
            "class counts differ");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    nodata_predictions += other.nodata_predictions;
  }
};

/// Tallies validation samples against a label map. Each sample contributes
/// one count at (predicted class at its pixel, reference label); samples on
/// nodata pixels are tallied separately. The optional mask restricts scoring
/// to samples on cloud or shadow pixels.
inline ConfusionMatrix score(const LabelRaster& map, const SampleSet& samples,
                             const MaskRaster* mask = nullptr) {
  if (mask)
    require(mask->geometry == map.geometry, ErrorCode::GeometryMismatch,
            "mask and map on different grids");
  ConfusionMatrix cm(map.num_classes);
  for (const auto& p : samples.points) {
    if (p.split != SampleSplit::Validation) continue;
    require(p.label >= 0 && p.label < map.num_classes, ErrorCode::InvalidArgument,
            "sample label out of range");
    const int col = map.geometry.map_to_col(p.x);
    const int row = map.geometry.map_to_row(p.y);
    require(map.geometry.contains(col, row), ErrorCode::SampleOffGrid,
            "sample at (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                ") is outside the map");
    const std::int64_t i = static_cast<std::int64_t>(row) * map.geometry.width + col;
    if (mask && !is_cloud_or_shadow(mask->flag(i))) continue;
    const std::uint8_t predicted = map.labels[static_cast<std::size_t>(i)];
    if (predicted == kNoDataLabel) {
      ++cm.nodata_predictions;
      continue;
    }
    ++cm.at(predicted, p.label);
  }
  return cm;
}

inline double overall_accuracy(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  require(total > 0, ErrorCode::EmptyMatrix, "no scored samples");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

struct ClassAccuracy {
  std::optional<double> user;      // diagonal / row total (precision)
  std::optional<double> producer;  // diagonal / column total (recall)
};

/// Per-class accuracies; classes with an empty row or column report no value
/// rather than zero.
inline std::vector<ClassAccuracy> class_accuracies(const ConfusionMatrix& cm) {
  std::vector<ClassAccuracy> out(static_cast<std::size_t>(cm.num_classes));
  for (int i = 0; i < cm.num_classes; ++i) {
    const std::int64_t row = cm.row_total(i);
    const std::int64_t col = cm.col_total(i);
    if (row > 0) out[i].user = static_cast<double>(cm.at(i, i)) / row;
    if (col > 0) out[i].producer = static_cast<double>(cm.at(i, i)) / col;
  }
  return out;
}

// Percent display matches the usual reporting convention: one decimal for
// overall accuracy, whole percentages for the per-class values.
inline std::string format_percent_1dp(double fraction) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << fraction * 100.0;
  return os.str();
}

inline long percent_int(double fraction) { return std::lround(fraction * 100.0); }

inline std::string format_confusion_table(const ConfusionMatrix& cm,
                                          const std::vector<std::string>& class_names = {}) {
  auto name = [&](int i) {
    return i < static_cast<int>(class_names.size()) ? class_names[i]
                                                    : "C" + std::to_string(i);
  };
  const auto acc = class_accuracies(cm);
  const int width = 9;
  std::ostringstream os;
  os << std::left << std::setw(12) << "" << std::right;
  for (int j = 0; j < cm.num_classes; ++j) os << std::setw(width) << name(j);
  os << std::setw(width) << "Total" << std::setw(width) << "UA(%)" << "\n";
  for (int i = 0; i < cm.num_classes; ++i) {
    os << std::left << std::setw(12) << name(i) << std::right;
    for (int j = 0; j < cm.num_classes; ++j) os << std::setw(width) << cm.at(i, j);
    os << std::setw(width) << cm.row_total(i);
    if (acc[i].user)
      os << std::setw(width) << percent_int(*acc[i].user);
    else
      os << std::setw(width) << "-";
    os << "\n";
  }
  os << std::left << std::setw(12) << "Total" << std::right;
  for (int j = 0; j < cm.num_classes; ++j) os << std::setw(width) << cm.col_total(j);
  os << std::setw(width) << cm.total() << "\n";
  os << std::left << std::setw(12) << "PA(%)" << std::right;
  for (int j = 0; j < cm.num_classes; ++j) {
    if (acc[j].producer)
      os << std::setw(width) << percent_int(*acc[j].producer);
    else
      os << std::setw(width) << "-";
  }
  os << "\n";
  os << "overall accuracy: " << format_percent_1dp(overall_accuracy(cm)) << "%\n";
  if (cm.nodata_predictions > 0)
    os << "unscored nodata predictions: " << cm.nodata_predictions << "\n";
  return os.str();
}

inline std::string format_confusion_csv(const ConfusionMatrix& cm,
                                        const std::vector<std::string>& class_names = {}) {
  auto name = [&](int i) {
    return i < static_cast<int>(class_names.size()) ? class_names[i]
                                                    : "C" + std::to_string(i);
  };
  const auto acc = class_accuracies(cm);
  std::ostringstream os;
  os << "class";
  for (int j = 0; j < cm.num_classes; ++j) os << ',' << name(j);
  os << ",total,user_accuracy\n";
  for (int i = 0; i < cm.num_classes; ++i) {
    os << name(i);
    for (int j = 0; j < cm.num_classes; ++j) os << ',' << cm.at(i, j);
    os << ',' << cm.row_total(i) << ',';
    if (acc[i].user) os << *acc[i].user;
    os << "\n";
  }
  os << "producer_accuracy";
  for (int j = 0; j < cm.num_classes; ++j) {
    os << ',';
    if (acc[j].producer) os << *acc[j].producer;
  }
  os << ",,\n";
  os << "overall_accuracy," << overall_accuracy(cm) << ",,\n";
  return os.str();
}

}  // namespace lcfuse
