#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lcfuse/align.hpp"
#include "lcfuse/assess.hpp"
#include "lcfuse/digest.hpp"
#include "lcfuse/error.hpp"
#include "lcfuse/features.hpp"
#include "lcfuse/pgm.hpp"
#include "lcfuse/raster_io.hpp"
#include "lcfuse/synth.hpp"
#include "lcfuse/unmix.hpp"

namespace lcfuse {

namespace fs = std::filesystem;

// Exit codes shared by every subcommand: 0 success, 1 domain error,
// 2 usage error (the argument parser owns that one).
constexpr int kExitOk = 0;
constexpr int kExitDomainError = 1;
constexpr int kExitUsageError = 2;

template <typename Fn>
int run_command(std::ostream& err, Fn&& fn) {
  try {
    fn();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
}

/// Plain-text run record: configuration plus input/output digests.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void config(const std::string& key, const std::string& value) {
    config_.emplace_back(key, value);
  }
  void input(const std::string& role, const fs::path& path) {
    files_.push_back({"input", role, path});
  }
  void output(const std::string& role, const fs::path& path) {
    files_.push_back({"output", role, path});
  }

  void write(const fs::path& path) const {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoFailure, "cannot write " + path.string());
    out << "lcfuse_manifest: 1\n";
    out << "command: " << command_ << "\n";
    for (const auto& [k, v] : config_) out << k << ": " << v << "\n";
    for (const auto& f : files_) {
      out << f.direction << " " << f.role << " " << f.path.string() << " fnv1a64="
          << digest_hex(fnv1a64_file(f.path)) << "\n";
    }
    out.flush();
    require(out.good(), ErrorCode::IoFailure, "write failed: " + path.string());
  }

 private:
  struct FileEntry {
    std::string direction;
    std::string role;
    fs::path path;
  };
  std::string command_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::vector<FileEntry> files_;
};

// ---- fuse ----

struct FuseConfig {
  std::string mode = "two_stage";  // or "a_only"
  fs::path priors_a;
  fs::path priors_b;
  fs::path mask_b;
  fs::path f_map;          // precomputed cloud-fraction map
  fs::path bands_b;        // alternative: unmix these to get the fraction map
  fs::path endmembers;     // with bands_b; extracted when absent
  fs::path priors_m;       // coarse source
  fs::path coarse_series;  // for the missing-fraction map
  fs::path m_fractions;    // alternative: precomputed missing fractions
  fs::path out_dir = ".";
  std::string roles;  // e.g. "cloud=0,soil=1,vegetation=2,dark=3"
  int num_endmembers = 4;
  int red_band = 2;
  int nir_band = 3;
  int threads = 0;
};

inline void apply_role_override(EndmemberSet& em, const std::string& roles) {
  std::istringstream ss(roles);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    require(eq != std::string::npos, ErrorCode::InvalidArgument,
            "expected role=index, got: " + item);
    const EndmemberRole role = role_from_name(item.substr(0, eq));
    int index = -1;
    try {
      index = std::stoi(item.substr(eq + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "bad endmember index in: " + item);
    }
    require(index >= 0 && index < em.count(), ErrorCode::InvalidArgument,
            "endmember index out of range: " + item);
    em.roles[static_cast<std::size_t>(index)] = role;
  }
}

inline int run_fuse(const FuseConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_command(err, [&] {
    require(cfg.mode == "two_stage" || cfg.mode == "a_only", ErrorCode::InvalidArgument,
            "mode must be two_stage or a_only");
    require(!cfg.priors_a.empty(), ErrorCode::MissingInput, "priors_a is required");
    const bool two_stage = cfg.mode == "two_stage";

    Manifest manifest("fuse");
    manifest.config("mode", cfg.mode);
    manifest.input("priors_a", cfg.priors_a);

    const ProbabilityRaster priors_a = read_probability_raster(cfg.priors_a);

    ProbabilityRaster priors_b;
    MaskRaster mask_b;
    BandRaster f_map;
    if (two_stage) {
      require(!cfg.priors_b.empty() && !cfg.mask_b.empty(), ErrorCode::MissingInput,
              "two_stage mode needs priors_b and mask_b");
      priors_b = read_probability_raster(cfg.priors_b);
      mask_b = read_mask_raster(cfg.mask_b);
      manifest.input("priors_b", cfg.priors_b);
      manifest.input("mask_b", cfg.mask_b);
      if (!cfg.f_map.empty()) {
        f_map = read_band_raster(cfg.f_map);
        manifest.input("f_map", cfg.f_map);
      } else {
        require(!cfg.bands_b.empty(), ErrorCode::MissingInput,
                "two_stage mode needs either f_map or bands_b");
        const BandRaster bands = read_band_raster(cfg.bands_b);
        manifest.input("bands_b", cfg.bands_b);
        EndmemberSet em;
        if (!cfg.endmembers.empty()) {
          em = read_endmembers(cfg.endmembers);
          manifest.input("endmembers", cfg.endmembers);
        } else {
          std::vector<std::vector<double>> spectra;
          spectra.reserve(static_cast<std::size_t>(bands.pixel_count()));
          std::vector<double> px(static_cast<std::size_t>(bands.num_bands));
          for (std::int64_t i = 0; i < bands.pixel_count(); ++i) {
            bool ok = true;
            for (int b = 0; b < bands.num_bands; ++b) {
              px[static_cast<std::size_t>(b)] = bands.value(i, b);
              if (BandRaster::is_nodata(bands.value(i, b))) ok = false;
            }
            if (ok) spectra.push_back(px);
          }
          em = nfindr_extract(spectra, cfg.num_endmembers);
          manifest.config("endmember_source", "nfindr");
        }
        if (!cfg.roles.empty())
          apply_role_override(em, cfg.roles);
        else if (em.roles.empty() ||
                 em.roles[0] == EndmemberRole::Unassigned)
          assign_roles(em, cfg.red_band, cfg.nir_band);
        f_map = fraction_raster(bands, mask_b, em, cfg.threads);
      }
    }

    ProbabilityRaster priors_m;
    GroupMap groups;
    BandRaster m_fractions;
    bool has_coarse = !cfg.priors_m.empty();
    bool has_missing = false;
    if (has_coarse) {
      priors_m = read_probability_raster(cfg.priors_m);
      manifest.input("priors_m", cfg.priors_m);
      groups = build_group_map(priors_a.geometry, priors_m.geometry);
      require(cfg.m_fractions.empty() || cfg.coarse_series.empty(),
              ErrorCode::InvalidArgument,
              "give either m_fractions or coarse_series, not both");
      if (!cfg.m_fractions.empty()) {
        m_fractions = read_band_raster(cfg.m_fractions);
        manifest.input("m_fractions", cfg.m_fractions);
        has_missing = true;
      } else if (!cfg.coarse_series.empty()) {
        const TimeSeriesStack stack = read_timeseries_stack(cfg.coarse_series);
        manifest.input("coarse_series", cfg.coarse_series);
        m_fractions = missing_fraction_raster(stack);
        has_missing = true;
      }
    }

    FuseInputs inputs;
    inputs.priors_a = &priors_a;
    inputs.mode = two_stage ? FuseMode::TwoStage : FuseMode::AOnly;
    inputs.threads = cfg.threads;
    if (two_stage) {
      inputs.priors_b = &priors_b;
      inputs.mask_b = &mask_b;
      inputs.cloud_fraction = &f_map;
    }
    if (has_coarse) {
      inputs.priors_coarse = &priors_m;
      inputs.groups = &groups;
      if (has_missing) inputs.coarse_missing = &m_fractions;
    }

    const FuseResult result = fuse_raster(inputs);

    fs::create_directories(cfg.out_dir);
    const fs::path posterior_path = cfg.out_dir / "posterior.lcr";
    const fs::path labels_path = cfg.out_dir / "labels.lcr";
    const fs::path stage1_path = cfg.out_dir / "stage1.lcr";
    const fs::path w_path = cfg.out_dir / "w_map.lcr";
    write_raster(result.posterior, posterior_path);
    write_raster(result.labels, labels_path);
    write_raster(result.stage1, stage1_path);
    write_raster(result.reliability, w_path);
    manifest.output("posterior", posterior_path);
    manifest.output("labels", labels_path);
    manifest.output("stage1", stage1_path);
    manifest.output("w_map", w_path);
    if (two_stage) {
      const fs::path f_path = cfg.out_dir / "f_map.lcr";
      write_raster(f_map, f_path);
      manifest.output("f_map", f_path);
    }
    manifest.write(cfg.out_dir / "manifest.txt");
    out << "fused " << priors_a.pixel_count() << " pixels, " << priors_a.num_classes
        << " classes -> " << posterior_path.string() << "\n";
  });
}

// ---- assess ----

struct AssessConfig {
  fs::path map;
  fs::path samples;
  fs::path mask;     // optional: restrict to cloud/shadow pixels
  fs::path csv_out;  // optional
  std::vector<std::string> class_names;
};

inline int run_assess(const AssessConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_command(err, [&] {
    const LabelRaster map = read_label_raster(cfg.map);
    const SampleSet samples = read_samples(cfg.samples);
    std::optional<MaskRaster> mask;
    if (!cfg.mask.empty()) mask = read_mask_raster(cfg.mask);

    const ConfusionMatrix cm = score(map, samples, mask ? &*mask : nullptr);
    if (cm.total() == 0) {
      out << "0 samples scored";
      if (cm.nodata_predictions > 0)
        out << " (" << cm.nodata_predictions << " on nodata pixels)";
      out << "\n";
      return;
    }
    out << format_confusion_table(cm, cfg.class_names);
    if (!cfg.csv_out.empty()) {
      std::ofstream csv(cfg.csv_out);
      require(csv.good(), ErrorCode::IoFailure, "cannot write " + cfg.csv_out.string());
      csv << format_confusion_csv(cm, cfg.class_names);
    }
  });
}

// ---- synth ----

struct SynthConfig {
  SynthSpec spec;
  fs::path out_dir = ".";
};

inline int run_synth(const SynthConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_command(err, [&] {
    const SynthScene scene = generate_scene(cfg.spec);
    write_scene(scene, cfg.out_dir);
    std::int64_t cloud = 0, shadow = 0;
    for (std::int64_t i = 0; i < scene.mask_b.pixel_count(); ++i) {
      if (scene.mask_b.flag(i) == MaskFlag::Cloud) ++cloud;
      if (scene.mask_b.flag(i) == MaskFlag::Shadow) ++shadow;
    }
    out << "scene " << cfg.spec.width << "x" << cfg.spec.height << ", "
        << cfg.spec.num_classes << " classes, " << cloud << " cloud / " << shadow
        << " shadow pixels -> " << cfg.out_dir.string() << "\n";
  });
}

// ---- unmix ----

struct UnmixConfig {
  fs::path bands;
  fs::path mask;            // with f_out
  fs::path endmembers_in;   // skip extraction when given
  fs::path endmembers_out;  // optional
  fs::path f_out;           // optional fraction map
  std::string roles;
  int num_endmembers = 4;
  int max_iterations = 100;
  int red_band = 2;
  int nir_band = 3;
  int threads = 0;
};

inline int run_unmix(const UnmixConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_command(err, [&] {
    const BandRaster bands = read_band_raster(cfg.bands);
    EndmemberSet em;
    if (!cfg.endmembers_in.empty()) {
      em = read_endmembers(cfg.endmembers_in);
    } else {
      std::vector<std::vector<double>> spectra;
      std::vector<double> px(static_cast<std::size_t>(bands.num_bands));
      for (std::int64_t i = 0; i < bands.pixel_count(); ++i) {
        bool ok = true;
        for (int b = 0; b < bands.num_bands; ++b) {
          px[static_cast<std::size_t>(b)] = bands.value(i, b);
          if (BandRaster::is_nodata(bands.value(i, b))) ok = false;
        }
        if (ok) spectra.push_back(px);
      }
      em = nfindr_extract(spectra, cfg.num_endmembers, cfg.max_iterations);
    }
    if (!cfg.roles.empty())
      apply_role_override(em, cfg.roles);
    else if (em.count() == 4 && em.roles[0] == EndmemberRole::Unassigned)
      assign_roles(em, cfg.red_band, cfg.nir_band);

    if (!cfg.endmembers_out.empty()) write_endmembers(em, cfg.endmembers_out);
    for (int i = 0; i < em.count(); ++i) {
      out << role_name(em.roles[i]);
      for (int b = 0; b < em.num_bands; ++b) out << ' ' << em.spectra[i][b];
      out << "\n";
    }
    if (!cfg.f_out.empty()) {
      require(!cfg.mask.empty(), ErrorCode::MissingInput,
              "fraction map needs a mask raster");
      const MaskRaster mask = read_mask_raster(cfg.mask);
      write_raster(fraction_raster(bands, mask, em, cfg.threads), cfg.f_out);
    }
  });
}

// ---- features ----

struct FeaturesConfig {
  fs::path bands;
  fs::path ndvi_out;      // needs red/nir bands
  fs::path textures_out;  // needs texture_band + glcm params
  int red_band = 2;
  int nir_band = 3;
  int texture_band = 3;
  GlcmParams glcm;
};

inline int run_features(const FeaturesConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_command(err, [&] {
    require(!cfg.ndvi_out.empty() || !cfg.textures_out.empty(), ErrorCode::MissingInput,
            "nothing to do: give ndvi_out and/or textures_out");
    const BandRaster bands = read_band_raster(cfg.bands);
    if (!cfg.ndvi_out.empty()) {
      write_raster(ndvi(bands, cfg.red_band, cfg.nir_band), cfg.ndvi_out);
      out << "ndvi -> " << cfg.ndvi_out.string() << "\n";
    }
    if (!cfg.textures_out.empty()) {
      write_raster(glcm_textures(bands, cfg.texture_band, cfg.glcm), cfg.textures_out);
      out << "textures (mean, contrast, entropy) -> " << cfg.textures_out.string()
          << "\n";
    }
  });
}

// ---- smooth ----

struct SmoothConfig {
  fs::path series;
  fs::path out;          // smoothed stack
  fs::path missing_out;  // optional missing-fraction raster
  int window = 5;
  int order = 2;
};

inline int run_smooth(const SmoothConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_command(err, [&] {
    require(!cfg.out.empty() || !cfg.missing_out.empty(), ErrorCode::MissingInput,
            "nothing to do: give out and/or missing_out");
    const TimeSeriesStack stack = read_timeseries_stack(cfg.series);
    if (!cfg.out.empty()) {
      write_raster(smooth_stack(stack, cfg.window, cfg.order), cfg.out);
      out << "smoothed " << stack.num_epochs << " epochs -> " << cfg.out.string()
          << "\n";
    }
    if (!cfg.missing_out.empty()) {
      write_raster(missing_fraction_raster(stack), cfg.missing_out);
      out << "missing fractions -> " << cfg.missing_out.string() << "\n";
    }
  });
}

}  // namespace lcfuse
