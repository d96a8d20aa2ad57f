#pragma once

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lcfuse/error.hpp"
#include "lcfuse/raster.hpp"

// Raster container format.
//
// A raster is two files: the payload at <path> and a plain-text header at
// <path>.hdr. The payload is raw little-endian 32-bit floats in row-major
// pixel order with channels interleaved per pixel. The header is "key: value"
// lines; common keys are kind, width, height, channels and the four affine
// geometry parameters. Kinds: probability (channels = num_classes),
// label (1 channel of class indices, nodata 255), band, mask (1 channel of
// flag codes 0..3), timeseries (channels = num_epochs*num_channels values
// followed by num_epochs missing flags per pixel).

namespace lcfuse {

static_assert(std::endian::native == std::endian::little,
              "payload format is little-endian");
static_assert(sizeof(float) == 4);

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::filesystem::path header_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".hdr");
}

struct HeaderMap {
  std::map<std::string, std::string> entries;

  const std::string& get(const std::string& key) const {
    auto it = entries.find(key);
    require(it != entries.end(), ErrorCode::MalformedHeader, "missing key: " + key);
    return it->second;
  }

  long get_int(const std::string& key) const {
    const std::string& s = get(key);
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(s, &pos);
    } catch (const std::exception&) {
      fail(ErrorCode::MalformedHeader, "bad integer for " + key + ": " + s);
    }
    require(pos == s.size(), ErrorCode::MalformedHeader, "bad integer for " + key);
    return v;
  }

  double get_double(const std::string& key) const {
    const std::string& s = get(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    require(end == s.c_str() + s.size() && end != s.c_str(),
            ErrorCode::MalformedHeader, "bad number for " + key + ": " + s);
    return v;
  }
};

inline HeaderMap read_header(const std::filesystem::path& path) {
  std::ifstream in(header_path(path));
  require(in.good(), ErrorCode::IoFailure,
          "cannot open header " + header_path(path).string());
  HeaderMap h;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto colon = line.find(':');
    require(colon != std::string::npos, ErrorCode::MalformedHeader,
            "expected 'key: value', got: " + line);
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    auto strip = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    };
    strip(key);
    strip(value);
    require(!key.empty(), ErrorCode::MalformedHeader, "empty key in header");
    h.entries[key] = value;
  }
  require(h.entries.count("lcfuse_raster") != 0, ErrorCode::MalformedHeader,
          "not a raster header: " + header_path(path).string());
  return h;
}

inline GridGeometry geometry_from_header(const HeaderMap& h) {
  GridGeometry g;
  g.width = static_cast<int>(h.get_int("width"));
  g.height = static_cast<int>(h.get_int("height"));
  g.origin_x = h.get_double("origin_x");
  g.origin_y = h.get_double("origin_y");
  g.pixel_size_x = h.get_double("pixel_size_x");
  g.pixel_size_y = h.get_double("pixel_size_y");
  require(g.width >= 1 && g.height >= 1, ErrorCode::MalformedHeader,
          "grid dimensions must be positive");
  require(g.pixel_size_x != 0.0 && g.pixel_size_y != 0.0, ErrorCode::MalformedHeader,
          "pixel sizes must be nonzero");
  return g;
}

inline void write_header(const std::filesystem::path& path, const std::string& kind,
                         const GridGeometry& g, int channels,
                         const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream out(header_path(path));
  require(out.good(), ErrorCode::IoFailure,
          "cannot write header " + header_path(path).string());
  out << "lcfuse_raster: 1\n";
  out << "kind: " << kind << "\n";
  out << "width: " << g.width << "\n";
  out << "height: " << g.height << "\n";
  out << "channels: " << channels << "\n";
  out << "origin_x: " << format_double(g.origin_x) << "\n";
  out << "origin_y: " << format_double(g.origin_y) << "\n";
  out << "pixel_size_x: " << format_double(g.pixel_size_x) << "\n";
  out << "pixel_size_y: " << format_double(g.pixel_size_y) << "\n";
  for (const auto& [k, v] : extra) out << k << ": " << v << "\n";
  out.flush();
  require(out.good(), ErrorCode::IoFailure, "write failed: " + header_path(path).string());
}

inline void write_payload(const std::filesystem::path& path, const std::vector<float>& data) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  out.flush();
  require(out.good(), ErrorCode::IoFailure, "write failed: " + path.string());
}

inline std::vector<float> read_payload(const std::filesystem::path& path,
                                       std::int64_t expected_values) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoFailure, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const std::int64_t bytes = in.tellg();
  in.seekg(0, std::ios::beg);
  require(bytes == expected_values * 4, ErrorCode::SizeMismatch,
          "payload is " + std::to_string(bytes) + " bytes, expected " +
              std::to_string(expected_values * 4) + ": " + path.string());
  std::vector<float> data(static_cast<std::size_t>(expected_values));
  in.read(reinterpret_cast<char*>(data.data()), expected_values * 4);
  require(in.gcount() == expected_values * 4, ErrorCode::IoFailure,
          "short read: " + path.string());
  return data;
}

}  // namespace detail

inline std::string raster_kind(const std::filesystem::path& path) {
  return detail::read_header(path).get("kind");
}

// ---- writers ----

inline void write_raster(const ProbabilityRaster& r, const std::filesystem::path& path) {
  detail::write_header(path, "probability", r.geometry, r.num_classes,
                       {{"num_classes", std::to_string(r.num_classes)}});
  detail::write_payload(path, r.data);
}

inline void write_raster(const LabelRaster& r, const std::filesystem::path& path) {
  std::vector<float> payload(r.labels.size());
  for (std::size_t i = 0; i < r.labels.size(); ++i) payload[i] = r.labels[i];
  detail::write_header(path, "label", r.geometry, 1,
                       {{"num_classes", std::to_string(r.num_classes)},
                        {"nodata", std::to_string(int(kNoDataLabel))}});
  detail::write_payload(path, payload);
}

inline void write_raster(const BandRaster& r, const std::filesystem::path& path) {
  detail::write_header(path, "band", r.geometry, r.num_bands, {{"nodata", "nan"}});
  detail::write_payload(path, r.data);
}

inline void write_raster(const MaskRaster& r, const std::filesystem::path& path) {
  std::vector<float> payload(r.flags.size());
  for (std::size_t i = 0; i < r.flags.size(); ++i) payload[i] = r.flags[i];
  detail::write_header(path, "mask", r.geometry, 1, {});
  detail::write_payload(path, payload);
}

inline void write_raster(const TimeSeriesStack& r, const std::filesystem::path& path) {
  const int channels = r.num_epochs * r.num_channels + r.num_epochs;
  std::vector<float> payload;
  payload.reserve(static_cast<std::size_t>(r.pixel_count()) * channels);
  for (std::int64_t i = 0; i < r.pixel_count(); ++i) {
    const float* v = r.values.data() + i * r.num_epochs * r.num_channels;
    payload.insert(payload.end(), v, v + r.num_epochs * r.num_channels);
    for (int t = 0; t < r.num_epochs; ++t)
      payload.push_back(r.is_missing(i, t) ? 1.0f : 0.0f);
  }
  detail::write_header(path, "timeseries", r.geometry, channels,
                       {{"num_epochs", std::to_string(r.num_epochs)},
                        {"num_channels", std::to_string(r.num_channels)}});
  detail::write_payload(path, payload);
}

// ---- readers ----

inline ProbabilityRaster read_probability_raster(const std::filesystem::path& path) {
  auto h = detail::read_header(path);
  require(h.get("kind") == "probability", ErrorCode::MalformedHeader,
          "expected kind probability, got " + h.get("kind"));
  GridGeometry g = detail::geometry_from_header(h);
  const int classes = static_cast<int>(h.get_int("num_classes"));
  require(classes >= 1, ErrorCode::MalformedHeader, "num_classes must be positive");
  require(static_cast<long>(classes) == h.get_int("channels"), ErrorCode::MalformedHeader,
          "channels must equal num_classes");

  ProbabilityRaster r(g, classes);
  r.data = detail::read_payload(path, g.pixel_count() * classes);
  for (std::int64_t i = 0; i < g.pixel_count(); ++i) {
    const float* p = r.pixel(i);
    int nan_count = 0;
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) {
      if (std::isnan(p[c])) {
        ++nan_count;
        continue;
      }
      require(p[c] >= -1e-9f && p[c] <= 1.0f + 1e-9f, ErrorCode::BadProbability,
              "probability " + std::to_string(p[c]) + " out of range at pixel " +
                  std::to_string(i));
      sum += p[c];
    }
    if (nan_count == classes) {
      r.valid[static_cast<std::size_t>(i)] = 0;
      continue;
    }
    require(nan_count == 0, ErrorCode::BadProbability,
            "partially NaN distribution at pixel " + std::to_string(i));
    require(std::abs(sum - 1.0) <= kProbabilitySumTolerance, ErrorCode::BadProbability,
            "distribution sums to " + std::to_string(sum) + " at pixel " +
                std::to_string(i));
    r.valid[static_cast<std::size_t>(i)] = 1;
  }
  return r;
}

inline LabelRaster read_label_raster(const std::filesystem::path& path) {
  auto h = detail::read_header(path);
  require(h.get("kind") == "label", ErrorCode::MalformedHeader,
          "expected kind label, got " + h.get("kind"));
  GridGeometry g = detail::geometry_from_header(h);
  const int classes = static_cast<int>(h.get_int("num_classes"));
  require(classes >= 1 && classes < kNoDataLabel, ErrorCode::MalformedHeader,
          "num_classes out of range");

  LabelRaster r(g, classes);
  auto payload = detail::read_payload(path, g.pixel_count());
  for (std::int64_t i = 0; i < g.pixel_count(); ++i) {
    const float v = payload[static_cast<std::size_t>(i)];
    const int label = static_cast<int>(v);
    require(std::isfinite(v) && v == static_cast<float>(label) &&
                (label == kNoDataLabel || (label >= 0 && label < classes)),
            ErrorCode::InvalidValue,
            "bad label value " + std::to_string(v) + " at pixel " + std::to_string(i));
    r.labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(label);
  }
  return r;
}

inline BandRaster read_band_raster(const std::filesystem::path& path) {
  auto h = detail::read_header(path);
  require(h.get("kind") == "band", ErrorCode::MalformedHeader,
          "expected kind band, got " + h.get("kind"));
  GridGeometry g = detail::geometry_from_header(h);
  const int bands = static_cast<int>(h.get_int("channels"));
  require(bands >= 1, ErrorCode::MalformedHeader, "channels must be positive");
  BandRaster r(g, bands);
  r.data = detail::read_payload(path, g.pixel_count() * bands);
  return r;
}

inline MaskRaster read_mask_raster(const std::filesystem::path& path) {
  auto h = detail::read_header(path);
  require(h.get("kind") == "mask", ErrorCode::MalformedHeader,
          "expected kind mask, got " + h.get("kind"));
  GridGeometry g = detail::geometry_from_header(h);
  MaskRaster r(g);
  auto payload = detail::read_payload(path, g.pixel_count());
  for (std::int64_t i = 0; i < g.pixel_count(); ++i) {
    const float v = payload[static_cast<std::size_t>(i)];
    require(v == 0.0f || v == 1.0f || v == 2.0f || v == 3.0f, ErrorCode::InvalidValue,
            "bad mask flag " + std::to_string(v) + " at pixel " + std::to_string(i));
    r.flags[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
  }
  return r;
}

inline TimeSeriesStack read_timeseries_stack(const std::filesystem::path& path) {
  auto h = detail::read_header(path);
  require(h.get("kind") == "timeseries", ErrorCode::MalformedHeader,
          "expected kind timeseries, got " + h.get("kind"));
  GridGeometry g = detail::geometry_from_header(h);
  const int epochs = static_cast<int>(h.get_int("num_epochs"));
  const int channels = static_cast<int>(h.get_int("num_channels"));
  require(epochs >= 1 && channels >= 1, ErrorCode::MalformedHeader,
          "epoch/channel counts must be positive");
  require(h.get_int("channels") == static_cast<long>(epochs) * channels + epochs,
          ErrorCode::MalformedHeader, "channels inconsistent with epochs");

  TimeSeriesStack r(g, epochs, channels);
  auto payload =
      detail::read_payload(path, g.pixel_count() * (epochs * channels + epochs));
  const int stride = epochs * channels + epochs;
  for (std::int64_t i = 0; i < g.pixel_count(); ++i) {
    const float* src = payload.data() + i * stride;
    std::copy(src, src + epochs * channels,
              r.values.data() + i * epochs * channels);
    for (int t = 0; t < epochs; ++t) {
      const float m = src[epochs * channels + t];
      require(m == 0.0f || m == 1.0f, ErrorCode::InvalidValue,
              "bad missing flag at pixel " + std::to_string(i));
      r.set_missing(i, t, m != 0.0f);
    }
  }
  return r;
}

// ---- sample sets (CSV: x,y,label,split) ----

inline void write_samples(const SampleSet& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + path.string());
  out << "x,y,label,split\n";
  for (const auto& p : s.points) {
    out << detail::format_double(p.x) << ',' << detail::format_double(p.y) << ','
        << p.label << ','
        << (p.split == SampleSplit::Train ? "TRAIN" : "VALIDATION") << "\n";
  }
  out.flush();
  require(out.good(), ErrorCode::IoFailure, "write failed: " + path.string());
}

inline SampleSet read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoFailure, "cannot open " + path.string());
  SampleSet s;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("x,", 0) == 0) continue;  // header row
    }
    std::istringstream ls(line);
    std::string fx, fy, flabel, fsplit;
    require(std::getline(ls, fx, ',') && std::getline(ls, fy, ',') &&
                std::getline(ls, flabel, ',') && std::getline(ls, fsplit),
            ErrorCode::MalformedHeader, "expected x,y,label,split: " + line);
    SamplePoint p;
    try {
      p.x = std::stod(fx);
      p.y = std::stod(fy);
      p.label = std::stoi(flabel);
    } catch (const std::exception&) {
      fail(ErrorCode::MalformedHeader, "bad sample row: " + line);
    }
    while (!fsplit.empty() && std::isspace(static_cast<unsigned char>(fsplit.back())))
      fsplit.pop_back();
    if (fsplit == "TRAIN") {
      p.split = SampleSplit::Train;
    } else if (fsplit == "VALIDATION") {
      p.split = SampleSplit::Validation;
    } else {
      fail(ErrorCode::MalformedHeader, "bad split value: " + fsplit);
    }
    s.points.push_back(p);
  }
  return s;
}

}  // namespace lcfuse
