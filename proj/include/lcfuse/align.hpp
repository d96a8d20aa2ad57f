#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lcfuse/error.hpp"
#include "lcfuse/raster.hpp"
#include "lcfuse/raster_io.hpp"

namespace lcfuse {

constexpr std::int32_t kNoGroup = -1;

/// Many-to-one mapping from fine-grid pixels to coarse-grid cells, with the
/// reverse membership lists. A fine pixel belongs to the coarse cell that
/// contains its center, or to no cell at all.
struct GroupMap {
  GridGeometry fine_geometry;
  GridGeometry coarse_geometry;
  std::vector<std::int32_t> assignment;        // per fine pixel, cell index or kNoGroup
  std::vector<std::vector<std::int32_t>> members;  // per coarse cell, fine pixel indices

  std::int64_t fine_pixel_count() const { return fine_geometry.pixel_count(); }
  std::int64_t cell_count() const { return coarse_geometry.pixel_count(); }
};

inline GroupMap build_group_map(const GridGeometry& fine, const GridGeometry& coarse) {
  fine.validate();
  coarse.validate();
  GroupMap gm;
  gm.fine_geometry = fine;
  gm.coarse_geometry = coarse;
  gm.assignment.assign(static_cast<std::size_t>(fine.pixel_count()), kNoGroup);
  gm.members.assign(static_cast<std::size_t>(coarse.pixel_count()), {});

  std::int64_t assigned = 0;
  for (int row = 0; row < fine.height; ++row) {
    const double cy = fine.pixel_center_y(row);
    const int coarse_row = coarse.map_to_row(cy);
    for (int col = 0; col < fine.width; ++col) {
      const double cx = fine.pixel_center_x(col);
      const int coarse_col = coarse.map_to_col(cx);
      if (!coarse.contains(coarse_col, coarse_row)) continue;
      const std::int64_t fine_index = static_cast<std::int64_t>(row) * fine.width + col;
      const std::int32_t cell =
          static_cast<std::int32_t>(coarse_row) * coarse.width + coarse_col;
      gm.assignment[static_cast<std::size_t>(fine_index)] = cell;
      gm.members[static_cast<std::size_t>(cell)].push_back(
          static_cast<std::int32_t>(fine_index));
      ++assigned;
    }
  }
  require(assigned > 0, ErrorCode::EmptyOverlap,
          "no fine pixel falls inside the coarse grid");
  return gm;
}

/// Most probable class per pixel; kNoDataLabel where invalid. Ties break to
/// the smallest class index.
inline LabelRaster map_labels(const ProbabilityRaster& r) {
  LabelRaster out(r.geometry, r.num_classes);
  for (std::int64_t i = 0; i < r.pixel_count(); ++i) {
    if (!r.is_valid(i)) continue;
    const float* p = r.pixel(i);
    int best = 0;
    for (int c = 1; c < r.num_classes; ++c)
      if (p[c] > p[best]) best = c;
    out.labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(best);
  }
  return out;
}

/// Fraction of a pixel's group (itself included) whose most probable class
/// matches the pixel's own. Ungrouped pixels get 0; invalid pixels stay
/// nodata. Invalid pixels neither count toward nor against their group.
inline BandRaster group_agreement(const ProbabilityRaster& fused_fine,
                                  const GroupMap& groups) {
  require(fused_fine.geometry == groups.fine_geometry, ErrorCode::GeometryMismatch,
          "probability raster does not match group map fine grid");
  const LabelRaster labels = map_labels(fused_fine);

  BandRaster out(fused_fine.geometry, 1);
  const int c = fused_fine.num_classes;
  std::vector<std::int64_t> hist(static_cast<std::size_t>(c));
  for (std::size_t cell = 0; cell < groups.members.size(); ++cell) {
    const auto& members = groups.members[cell];
    if (members.empty()) continue;
    std::fill(hist.begin(), hist.end(), 0);
    std::int64_t group_size = 0;
    for (std::int32_t p : members) {
      const std::uint8_t l = labels.labels[static_cast<std::size_t>(p)];
      if (l == kNoDataLabel) continue;
      ++hist[l];
      ++group_size;
    }
    for (std::int32_t p : members) {
      const std::uint8_t l = labels.labels[static_cast<std::size_t>(p)];
      if (l == kNoDataLabel) continue;
      out.value(p, 0) = static_cast<float>(static_cast<double>(hist[l]) /
                                           static_cast<double>(group_size));
    }
  }
  for (std::int64_t i = 0; i < fused_fine.pixel_count(); ++i) {
    if (groups.assignment[static_cast<std::size_t>(i)] == kNoGroup &&
        fused_fine.is_valid(i))
      out.value(i, 0) = 0.0f;
  }
  return out;
}

struct ReliabilityInputs {
  double group_agreement = 0.0;  // g, in [0,1]
  double missing_fraction = 0.0; // m, in [0,1]
};

/// w = g / (g + 1 - m). The 0/0 corner (g = 0, m = 1) resolves to 0:
/// no agreement and no data means no trust.
inline double reliability_weight(const ReliabilityInputs& in) {
  const double g = in.group_agreement;
  const double m = in.missing_fraction;
  require(g >= 0.0 && g <= 1.0 && m >= 0.0 && m <= 1.0, ErrorCode::InvalidArgument,
          "reliability inputs must lie in [0,1]");
  const double denom = g + 1.0 - m;
  if (denom <= 0.0) return 0.0;
  return std::clamp(g / denom, 0.0, 1.0);
}

// ---- group map serialization (1-band cell-index raster, -1 = ungrouped) ----

inline void write_group_map(const GroupMap& gm, const std::filesystem::path& path) {
  std::vector<float> payload(gm.assignment.size());
  for (std::size_t i = 0; i < gm.assignment.size(); ++i)
    payload[i] = static_cast<float>(gm.assignment[i]);
  detail::write_header(
      path, "groups", gm.fine_geometry, 1,
      {{"coarse_width", std::to_string(gm.coarse_geometry.width)},
       {"coarse_height", std::to_string(gm.coarse_geometry.height)},
       {"coarse_origin_x", detail::format_double(gm.coarse_geometry.origin_x)},
       {"coarse_origin_y", detail::format_double(gm.coarse_geometry.origin_y)},
       {"coarse_pixel_size_x", detail::format_double(gm.coarse_geometry.pixel_size_x)},
       {"coarse_pixel_size_y", detail::format_double(gm.coarse_geometry.pixel_size_y)}});
  detail::write_payload(path, payload);
}

inline GroupMap read_group_map(const std::filesystem::path& path) {
  auto h = detail::read_header(path);
  require(h.get("kind") == "groups", ErrorCode::MalformedHeader,
          "expected kind groups, got " + h.get("kind"));
  GroupMap gm;
  gm.fine_geometry = detail::geometry_from_header(h);
  gm.coarse_geometry.width = static_cast<int>(h.get_int("coarse_width"));
  gm.coarse_geometry.height = static_cast<int>(h.get_int("coarse_height"));
  gm.coarse_geometry.origin_x = h.get_double("coarse_origin_x");
  gm.coarse_geometry.origin_y = h.get_double("coarse_origin_y");
  gm.coarse_geometry.pixel_size_x = h.get_double("coarse_pixel_size_x");
  gm.coarse_geometry.pixel_size_y = h.get_double("coarse_pixel_size_y");
  gm.coarse_geometry.validate();

  auto payload = detail::read_payload(path, gm.fine_geometry.pixel_count());
  gm.assignment.resize(payload.size());
  gm.members.assign(static_cast<std::size_t>(gm.coarse_geometry.pixel_count()), {});
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const float v = payload[i];
    const auto cell = static_cast<std::int32_t>(v);
    require(v == static_cast<float>(cell) &&
                (cell == kNoGroup ||
                 (cell >= 0 && cell < gm.coarse_geometry.pixel_count())),
            ErrorCode::InvalidValue, "bad cell index " + std::to_string(v));
    gm.assignment[i] = cell;
    if (cell != kNoGroup)
      gm.members[static_cast<std::size_t>(cell)].push_back(
          static_cast<std::int32_t>(i));
  }
  return gm;
}

}  // namespace lcfuse
