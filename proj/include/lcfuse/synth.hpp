#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "lcfuse/align.hpp"
#include "lcfuse/classify.hpp"
#include "lcfuse/error.hpp"
#include "lcfuse/features.hpp"
#include "lcfuse/raster.hpp"
#include "lcfuse/raster_io.hpp"
#include "lcfuse/unmix.hpp"

namespace lcfuse {

// Deterministic synthetic scenes for end-to-end runs: a patchy ground-truth
// map, two fine-grid band stacks (the second corrupted by a cloud/shadow
// blob with a matching mask), a coarse time-series stack with missing
// epochs, train/validation samples, the true endmember spectra, and
// probability rasters from the built-in classifier trained on each source.

struct SynthSpec {
  std::uint64_t seed = 1;
  int width = 96;
  int height = 96;
  int num_classes = 5;
  int num_bands = 6;
  int red_band = 2;
  int nir_band = 3;
  int coarse_factor = 8;   // fine pixels per coarse cell edge
  int num_epochs = 20;
  int num_channels = 3;
  int label_patches = 12;
  double pixel_size = 30.0;
  double cloud_fraction = 0.20;
  double shadow_fraction = 0.05;
  double noise_a = 0.07;
  double noise_b = 0.07;
  double coarse_noise = 0.03;
  double missing_rate = 0.25;
  int train_samples = 600;
  int validation_samples = 300;
  double temperature = 60.0;
  int sg_window = 5;
  int sg_order = 2;

  void validate() const {
    require(width >= 8 && height >= 8, ErrorCode::InvalidArgument,
            "scene must be at least 8x8");
    require(num_classes >= 2 && num_classes <= 12, ErrorCode::InvalidArgument,
            "num_classes must be in [2,12]");
    require(num_bands >= 4, ErrorCode::InvalidArgument, "need at least 4 bands");
    require(red_band >= 0 && red_band < num_bands && nir_band >= 0 &&
                nir_band < num_bands && red_band != nir_band,
            ErrorCode::InvalidArgument, "bad red/nir band indices");
    require(coarse_factor >= 1, ErrorCode::InvalidArgument,
            "coarse_factor must be positive");
    require(num_epochs >= sg_window && num_channels >= 1, ErrorCode::InvalidArgument,
            "too few epochs or channels");
    require(cloud_fraction >= 0.0 && cloud_fraction <= 1.0 &&
                shadow_fraction >= 0.0 && shadow_fraction <= 1.0,
            ErrorCode::InvalidArgument, "mask fractions must lie in [0,1]");
    require(missing_rate >= 0.0 && missing_rate < 1.0, ErrorCode::InvalidArgument,
            "missing_rate must lie in [0,1)");
    require(noise_a >= 0.0 && noise_b >= 0.0 && coarse_noise >= 0.0,
            ErrorCode::InvalidArgument, "noise levels must be nonnegative");
    require(train_samples >= 4 * num_classes && validation_samples >= 1,
            ErrorCode::InvalidArgument, "too few samples");
    require(label_patches >= num_classes, ErrorCode::InvalidArgument,
            "need at least one patch per class");
    require(sg_window >= 1 && sg_window % 2 == 1 && sg_order >= 0 &&
                sg_order < sg_window,
            ErrorCode::InvalidArgument, "bad smoothing parameters");
    require(temperature > 0.0, ErrorCode::InvalidArgument,
            "temperature must be positive");
  }
};

struct SynthScene {
  LabelRaster truth;
  BandRaster bands_a;
  BandRaster bands_b;
  MaskRaster mask_b;
  TimeSeriesStack coarse_series;
  SampleSet samples;
  EndmemberSet endmembers;  // cloud, soil, vegetation, dark
  ProbabilityRaster priors_a;
  ProbabilityRaster priors_b;
  ProbabilityRaster priors_m;  // on the coarse grid
  GridGeometry coarse_geometry;
};

namespace detail {

inline std::vector<double> jittered(std::vector<double> base, std::mt19937_64& rng,
                                    double amount) {
  std::uniform_real_distribution<double> u(-amount, amount);
  for (double& v : base) v = std::max(0.0, v + u(rng));
  return base;
}

}  // namespace detail

inline SynthScene generate_scene(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int w = spec.width;
  const int h = spec.height;
  const int c = spec.num_classes;
  const int bands = spec.num_bands;
  const std::int64_t n = static_cast<std::int64_t>(w) * h;

  GridGeometry fine{w, h, 0.0, 0.0, spec.pixel_size, -spec.pixel_size};
  GridGeometry coarse{(w + spec.coarse_factor - 1) / spec.coarse_factor,
                      (h + spec.coarse_factor - 1) / spec.coarse_factor,
                      0.0,
                      0.0,
                      spec.pixel_size * spec.coarse_factor,
                      -spec.pixel_size * spec.coarse_factor};

  SynthScene scene{LabelRaster(fine, c),
                   BandRaster(fine, bands),
                   BandRaster(fine, bands),
                   MaskRaster(fine),
                   TimeSeriesStack(coarse, spec.num_epochs, spec.num_channels),
                   {},
                   {},
                   ProbabilityRaster(fine, c),
                   ProbabilityRaster(fine, c),
                   ProbabilityRaster(coarse, c),
                   coarse};

  // Material spectra: vegetation dips in red and peaks in nir, soil ramps
  // up, dark is low and flat, cloud high and flat.
  std::vector<double> veg(bands), soil(bands), dark(bands), cloud(bands);
  for (int b = 0; b < bands; ++b) {
    veg[b] = 0.12;
    soil[b] = 0.15 + 0.20 * b / std::max(1, bands - 1);
    dark[b] = 0.04;
    cloud[b] = 0.90;
  }
  veg[spec.red_band] = 0.05;
  veg[spec.nir_band] = 0.50;
  veg = detail::jittered(veg, rng, 0.01);
  soil = detail::jittered(soil, rng, 0.01);
  dark = detail::jittered(dark, rng, 0.005);
  cloud = detail::jittered(cloud, rng, 0.01);

  scene.endmembers.num_bands = bands;
  scene.endmembers.spectra = {cloud, soil, veg, dark};
  scene.endmembers.roles = {EndmemberRole::Cloud, EndmemberRole::Soil,
                            EndmemberRole::Vegetation, EndmemberRole::Dark};

  // Class signatures: mixtures of the non-cloud materials, redrawn until
  // pairwise separated.
  std::vector<std::vector<double>> signature(static_cast<std::size_t>(c));
  for (int attempt = 0; attempt < 200; ++attempt) {
    for (int k = 0; k < c; ++k) {
      double wv = unit(rng), ws = unit(rng), wd = 0.3 * unit(rng);
      const double total = wv + ws + wd;
      wv /= total;
      ws /= total;
      wd /= total;
      auto& sig = signature[static_cast<std::size_t>(k)];
      sig.assign(static_cast<std::size_t>(bands), 0.0);
      for (int b = 0; b < bands; ++b) sig[b] = wv * veg[b] + ws * soil[b] + wd * dark[b];
    }
    double min_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < c; ++i)
      for (int j = i + 1; j < c; ++j) {
        double d = 0.0;
        for (int b = 0; b < bands; ++b) {
          const double r = signature[i][b] - signature[j][b];
          d += r * r;
        }
        min_dist = std::min(min_dist, std::sqrt(d));
      }
    if (min_dist >= 0.09) break;
  }

  // Ground truth: nearest-patch-center labels, centers assigned round-robin.
  std::vector<double> center_x(static_cast<std::size_t>(spec.label_patches));
  std::vector<double> center_y(static_cast<std::size_t>(spec.label_patches));
  for (int p = 0; p < spec.label_patches; ++p) {
    center_x[p] = unit(rng) * w;
    center_y[p] = unit(rng) * h;
  }
  for (int row = 0; row < h; ++row)
    for (int col = 0; col < w; ++col) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int p = 0; p < spec.label_patches; ++p) {
        const double dx = col + 0.5 - center_x[p];
        const double dy = row + 0.5 - center_y[p];
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
          best_d = d;
          best = p;
        }
      }
      scene.truth.labels[static_cast<std::size_t>(row) * w + col] =
          static_cast<std::uint8_t>(best % c);
    }

  // Source A: clean bands.
  std::normal_distribution<double> noise_a(0.0, std::max(spec.noise_a, 1e-9));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& sig = signature[scene.truth.labels[static_cast<std::size_t>(i)]];
    for (int b = 0; b < bands; ++b)
      scene.bands_a.value(i, b) = static_cast<float>(sig[b] + noise_a(rng));
  }

  // Cloud/shadow blob: pixels ranked by distance to a random center; the
  // closest cloud_fraction*n become cloud, the next shadow_fraction*n shadow.
  const double blob_x = (0.25 + 0.5 * unit(rng)) * w;
  const double blob_y = (0.25 + 0.5 * unit(rng)) * h;
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double dx = i % w + 0.5 - blob_x;
    const double dy = i / w + 0.5 - blob_y;
    dist[static_cast<std::size_t>(i)] = dx * dx + dy * dy;
  }
  std::sort(order.begin(), order.end(), [&](std::int64_t lhs, std::int64_t rhs) {
    if (dist[lhs] != dist[rhs]) return dist[lhs] < dist[rhs];
    return lhs < rhs;
  });
  const std::int64_t n_cloud = std::llround(spec.cloud_fraction * n);
  const std::int64_t n_shadow =
      std::min(n - n_cloud, static_cast<std::int64_t>(std::llround(spec.shadow_fraction * n)));
  std::vector<double> opacity(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t r = 0; r < n_cloud; ++r) {
    scene.mask_b.set_flag(order[r], MaskFlag::Cloud);
    const double depth = n_cloud > 1 ? 1.0 - double(r) / double(n_cloud - 1) : 1.0;
    opacity[static_cast<std::size_t>(order[r])] = 0.55 + 0.40 * depth;
  }
  for (std::int64_t r = n_cloud; r < n_cloud + n_shadow; ++r) {
    scene.mask_b.set_flag(order[r], MaskFlag::Shadow);
    const double depth =
        n_shadow > 1 ? 1.0 - double(r - n_cloud) / double(n_shadow - 1) : 1.0;
    opacity[static_cast<std::size_t>(order[r])] = 0.35 + 0.30 * depth;
  }

  // Source B: same scene, corrupted toward cloud or dark inside the blob.
  std::normal_distribution<double> noise_b(0.0, std::max(spec.noise_b, 1e-9));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& sig = signature[scene.truth.labels[static_cast<std::size_t>(i)]];
    const double alpha = opacity[static_cast<std::size_t>(i)];
    const std::vector<double>* contaminant = nullptr;
    if (scene.mask_b.flag(i) == MaskFlag::Cloud) contaminant = &cloud;
    if (scene.mask_b.flag(i) == MaskFlag::Shadow) contaminant = &dark;
    for (int b = 0; b < bands; ++b) {
      double v = sig[b];
      if (contaminant) v = (1.0 - alpha) * v + alpha * (*contaminant)[b];
      scene.bands_b.value(i, b) = static_cast<float>(v + noise_b(rng));
    }
  }

  // Coarse truth: majority fine label per cell (ties to the smaller class).
  GroupMap groups = build_group_map(fine, coarse);
  std::vector<int> coarse_label(static_cast<std::size_t>(coarse.pixel_count()), -1);
  for (std::int64_t cell = 0; cell < coarse.pixel_count(); ++cell) {
    const auto& members = groups.members[static_cast<std::size_t>(cell)];
    if (members.empty()) continue;
    std::vector<int> hist(static_cast<std::size_t>(c), 0);
    for (auto p : members) ++hist[scene.truth.labels[static_cast<std::size_t>(p)]];
    coarse_label[static_cast<std::size_t>(cell)] =
        static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  }

  // Coarse time series from per-class seasonal profiles.
  const int t_count = spec.num_epochs;
  const int ch_count = spec.num_channels;
  std::vector<double> profile_base(static_cast<std::size_t>(c) * ch_count);
  std::vector<double> profile_amp(static_cast<std::size_t>(c) * ch_count);
  std::vector<double> profile_phase(static_cast<std::size_t>(c) * ch_count);
  for (std::size_t i = 0; i < profile_base.size(); ++i) {
    profile_base[i] = 0.2 + 0.6 * unit(rng);
    profile_amp[i] = 0.05 + 0.20 * unit(rng);
    profile_phase[i] = 2.0 * std::numbers::pi * unit(rng);
  }
  std::normal_distribution<double> noise_m(0.0, std::max(spec.coarse_noise, 1e-9));
  for (std::int64_t cell = 0; cell < coarse.pixel_count(); ++cell) {
    const int k = coarse_label[static_cast<std::size_t>(cell)];
    for (int t = 0; t < t_count; ++t) {
      const bool missing = unit(rng) < spec.missing_rate;
      scene.coarse_series.set_missing(cell, t, missing);
      for (int ch = 0; ch < ch_count; ++ch) {
        double v = 0.0;
        if (!missing && k >= 0) {
          const std::size_t pi = static_cast<std::size_t>(k) * ch_count + ch;
          v = profile_base[pi] +
              profile_amp[pi] * std::sin(2.0 * std::numbers::pi * t / t_count + profile_phase[pi]) +
              noise_m(rng);
        }
        scene.coarse_series.value(cell, t, ch) = static_cast<float>(v);
      }
    }
  }

  // Samples: distinct pixels, training first, then validation.
  std::vector<std::int64_t> pix(static_cast<std::size_t>(n));
  std::iota(pix.begin(), pix.end(), 0);
  std::shuffle(pix.begin(), pix.end(), rng);
  const int wanted = spec.train_samples + spec.validation_samples;
  require(wanted <= n, ErrorCode::InvalidArgument, "more samples than pixels");
  for (int s = 0; s < wanted; ++s) {
    const std::int64_t i = pix[static_cast<std::size_t>(s)];
    SamplePoint p;
    p.x = fine.pixel_center_x(static_cast<int>(i % w));
    p.y = fine.pixel_center_y(static_cast<int>(i / w));
    p.label = scene.truth.labels[static_cast<std::size_t>(i)];
    p.split = s < spec.train_samples ? SampleSplit::Train : SampleSplit::Validation;
    scene.samples.points.push_back(p);
  }

  // Built-in classifier on each source.
  auto pixel_features = [bands](const BandRaster& src, std::int64_t i) {
    std::vector<double> f(static_cast<std::size_t>(bands));
    for (int b = 0; b < bands; ++b) f[static_cast<std::size_t>(b)] = src.value(i, b);
    return f;
  };
  auto predict_fine = [&](const BandRaster& src, const ClassifierModel& model,
                          ProbabilityRaster& out) {
    for (std::int64_t i = 0; i < n; ++i) {
      const auto proba = predict_proba(model, pixel_features(src, i));
      out.set_distribution(i, proba);
    }
  };

  std::vector<std::vector<double>> feats_a, feats_b;
  std::vector<int> labels_a, labels_b;
  for (const auto& p : scene.samples.points) {
    if (p.split != SampleSplit::Train) continue;
    const std::int64_t i =
        static_cast<std::int64_t>(fine.map_to_row(p.y)) * w + fine.map_to_col(p.x);
    feats_a.push_back(pixel_features(scene.bands_a, i));
    labels_a.push_back(p.label);
    if (!is_cloud_or_shadow(scene.mask_b.flag(i))) {  // masked samples excluded
      feats_b.push_back(pixel_features(scene.bands_b, i));
      labels_b.push_back(p.label);
    }
  }
  const ClassifierModel model_a = train_classifier(feats_a, labels_a, c, spec.temperature);
  // The B classifier trains on clear-area samples only. If the blob swallows
  // nearly a whole class, fall back to all samples rather than failing; the
  // corrupted spectra inside the blob stay corrupted either way.
  std::vector<int> clear_count(static_cast<std::size_t>(c), 0);
  for (int l : labels_b) ++clear_count[static_cast<std::size_t>(l)];
  const bool b_trainable =
      std::all_of(clear_count.begin(), clear_count.end(), [](int v) { return v >= 2; });
  if (!b_trainable) {
    feats_b.clear();
    labels_b.clear();
    for (const auto& p : scene.samples.points) {
      if (p.split != SampleSplit::Train) continue;
      const std::int64_t i =
          static_cast<std::int64_t>(fine.map_to_row(p.y)) * w + fine.map_to_col(p.x);
      feats_b.push_back(pixel_features(scene.bands_b, i));
      labels_b.push_back(p.label);
    }
  }
  const ClassifierModel model_b = train_classifier(feats_b, labels_b, c, spec.temperature);
  predict_fine(scene.bands_a, model_a, scene.priors_a);
  predict_fine(scene.bands_b, model_b, scene.priors_b);

  // Coarse classifier works on the smoothed series.
  const TimeSeriesStack smoothed =
      smooth_stack(scene.coarse_series, spec.sg_window, spec.sg_order);
  auto cell_features = [&](std::int64_t cell) {
    std::vector<double> f;
    f.reserve(static_cast<std::size_t>(t_count) * ch_count);
    for (int t = 0; t < t_count; ++t)
      for (int ch = 0; ch < ch_count; ++ch) f.push_back(smoothed.value(cell, t, ch));
    return f;
  };
  std::vector<std::vector<double>> feats_m;
  std::vector<int> labels_m;
  for (const auto& p : scene.samples.points) {
    if (p.split != SampleSplit::Train) continue;
    const std::int64_t i =
        static_cast<std::int64_t>(fine.map_to_row(p.y)) * w + fine.map_to_col(p.x);
    const std::int32_t cell = groups.assignment[static_cast<std::size_t>(i)];
    if (cell == kNoGroup) continue;
    feats_m.push_back(cell_features(cell));
    labels_m.push_back(p.label);
  }
  const ClassifierModel model_m = train_classifier(feats_m, labels_m, c, spec.temperature);
  for (std::int64_t cell = 0; cell < coarse.pixel_count(); ++cell)
    scene.priors_m.set_distribution(cell, predict_proba(model_m, cell_features(cell)));

  return scene;
}

inline void write_scene(const SynthScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_raster(scene.truth, dir / "truth.lcr");
  write_raster(scene.bands_a, dir / "bands_a.lcr");
  write_raster(scene.bands_b, dir / "bands_b.lcr");
  write_raster(scene.mask_b, dir / "mask_b.lcr");
  write_raster(scene.coarse_series, dir / "coarse_series.lcr");
  write_raster(scene.priors_a, dir / "priors_a.lcr");
  write_raster(scene.priors_b, dir / "priors_b.lcr");
  write_raster(scene.priors_m, dir / "priors_m.lcr");
  write_samples(scene.samples, dir / "samples.csv");
  write_endmembers(scene.endmembers, dir / "endmembers.csv");
}

}  // namespace lcfuse
