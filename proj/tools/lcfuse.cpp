#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "lcfuse/pipeline.hpp"

// Command-line front end. The top-level --config <file> reads key=value
// lines, with subcommand options grouped in a [subcommand] section;
// command-line flags override config-file values.

int main(int argc, char** argv) {
  CLI::App app{"lcfuse: probability-raster fusion for multi-source land-cover mapping"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a key=value file");

  // fuse
  lcfuse::FuseConfig fuse_cfg;
  CLI::App* fuse = app.add_subcommand("fuse", "fuse probability rasters into a land-cover map");
  fuse->add_option("--mode", fuse_cfg.mode, "two_stage or a_only")
      ->check(CLI::IsMember({"two_stage", "a_only"}));
  fuse->add_option("--priors-a", fuse_cfg.priors_a, "primary fine-grid probability raster")
      ->required();
  fuse->add_option("--priors-b", fuse_cfg.priors_b, "secondary fine-grid probability raster");
  fuse->add_option("--mask-b", fuse_cfg.mask_b, "cloud/shadow mask for the secondary source");
  fuse->add_option("--f-map", fuse_cfg.f_map, "precomputed cloud-fraction map");
  fuse->add_option("--bands-b", fuse_cfg.bands_b,
                   "secondary-source bands; unmixed for the cloud-fraction map");
  fuse->add_option("--endmembers", fuse_cfg.endmembers,
                   "endmember CSV for unmixing (extracted if omitted)");
  fuse->add_option("--priors-m", fuse_cfg.priors_m, "coarse-grid probability raster");
  fuse->add_option("--coarse-series", fuse_cfg.coarse_series,
                   "coarse time-series stack; provides missing fractions");
  fuse->add_option("--m-fractions", fuse_cfg.m_fractions,
                   "precomputed coarse missing-fraction raster");
  fuse->add_option("--roles", fuse_cfg.roles,
                   "endmember role override, e.g. cloud=0,soil=1,vegetation=2,dark=3");
  fuse->add_option("--num-endmembers", fuse_cfg.num_endmembers, "endmembers to extract");
  fuse->add_option("--red-band", fuse_cfg.red_band, "red band index for role heuristics");
  fuse->add_option("--nir-band", fuse_cfg.nir_band, "nir band index for role heuristics");
  fuse->add_option("--threads", fuse_cfg.threads, "worker threads (0 = all cores)");
  fuse->add_option("--out-dir", fuse_cfg.out_dir, "output directory");

  // assess
  lcfuse::AssessConfig assess_cfg;
  CLI::App* assess = app.add_subcommand("assess", "confusion-matrix accuracy assessment");
  assess->add_option("--map", assess_cfg.map, "label raster to score")->required();
  assess->add_option("--samples", assess_cfg.samples, "sample CSV (x,y,label,split)")
      ->required();
  assess->add_option("--mask", assess_cfg.mask,
                     "restrict scoring to cloud/shadow pixels of this mask");
  assess->add_option("--csv-out", assess_cfg.csv_out, "also write the matrix as CSV");
  assess->add_option("--class-names", assess_cfg.class_names, "class display names")
      ->delimiter(',');

  // synth
  lcfuse::SynthConfig synth_cfg;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic test scene");
  synth->add_option("--seed", synth_cfg.spec.seed, "random seed");
  synth->add_option("--width", synth_cfg.spec.width, "scene width in pixels");
  synth->add_option("--height", synth_cfg.spec.height, "scene height in pixels");
  synth->add_option("--classes", synth_cfg.spec.num_classes, "number of classes");
  synth->add_option("--bands", synth_cfg.spec.num_bands, "number of spectral bands");
  synth->add_option("--red-band", synth_cfg.spec.red_band, "red band index");
  synth->add_option("--nir-band", synth_cfg.spec.nir_band, "nir band index");
  synth->add_option("--coarse-factor", synth_cfg.spec.coarse_factor,
                    "fine pixels per coarse cell edge");
  synth->add_option("--epochs", synth_cfg.spec.num_epochs, "time-series epochs");
  synth->add_option("--channels", synth_cfg.spec.num_channels, "time-series channels");
  synth->add_option("--patches", synth_cfg.spec.label_patches, "ground-truth patches");
  synth->add_option("--pixel-size", synth_cfg.spec.pixel_size, "fine pixel size");
  synth->add_option("--cloud-fraction", synth_cfg.spec.cloud_fraction,
                    "fraction of pixels under cloud");
  synth->add_option("--shadow-fraction", synth_cfg.spec.shadow_fraction,
                    "fraction of pixels under shadow");
  synth->add_option("--noise-a", synth_cfg.spec.noise_a, "source A band noise");
  synth->add_option("--noise-b", synth_cfg.spec.noise_b, "source B band noise");
  synth->add_option("--coarse-noise", synth_cfg.spec.coarse_noise, "coarse series noise");
  synth->add_option("--missing-rate", synth_cfg.spec.missing_rate,
                    "per-epoch missing probability");
  synth->add_option("--train-samples", synth_cfg.spec.train_samples, "training samples");
  synth->add_option("--val-samples", synth_cfg.spec.validation_samples,
                    "validation samples");
  synth->add_option("--temperature", synth_cfg.spec.temperature,
                    "classifier softmax temperature");
  synth->add_option("--sg-window", synth_cfg.spec.sg_window, "smoothing window");
  synth->add_option("--sg-order", synth_cfg.spec.sg_order, "smoothing polynomial order");
  synth->add_option("--out-dir", synth_cfg.out_dir, "output directory");

  // unmix
  lcfuse::UnmixConfig unmix_cfg;
  CLI::App* unmix = app.add_subcommand("unmix", "extract endmembers / compute fractions");
  unmix->add_option("--bands", unmix_cfg.bands, "band raster")->required();
  unmix->add_option("--mask", unmix_cfg.mask, "cloud/shadow mask (needed for --f-out)");
  unmix->add_option("--endmembers-in", unmix_cfg.endmembers_in,
                    "use these endmembers instead of extracting");
  unmix->add_option("--endmembers-out", unmix_cfg.endmembers_out, "write endmember CSV");
  unmix->add_option("--f-out", unmix_cfg.f_out, "write cloud-fraction raster");
  unmix->add_option("--roles", unmix_cfg.roles, "endmember role override");
  unmix->add_option("--num-endmembers", unmix_cfg.num_endmembers, "endmembers to extract");
  unmix->add_option("--max-iterations", unmix_cfg.max_iterations, "search passes");
  unmix->add_option("--red-band", unmix_cfg.red_band, "red band index");
  unmix->add_option("--nir-band", unmix_cfg.nir_band, "nir band index");
  unmix->add_option("--threads", unmix_cfg.threads, "worker threads (0 = all cores)");

  // features
  lcfuse::FeaturesConfig features_cfg;
  CLI::App* features = app.add_subcommand("features", "spectral index and texture features");
  features->add_option("--bands", features_cfg.bands, "band raster")->required();
  features->add_option("--ndvi-out", features_cfg.ndvi_out, "write ndvi raster");
  features->add_option("--textures-out", features_cfg.textures_out,
                       "write mean/contrast/entropy raster");
  features->add_option("--red-band", features_cfg.red_band, "red band index");
  features->add_option("--nir-band", features_cfg.nir_band, "nir band index");
  features->add_option("--texture-band", features_cfg.texture_band,
                       "band for texture extraction");
  features->add_option("--grey-levels", features_cfg.glcm.grey_levels,
                       "quantization levels");
  features->add_option("--window", features_cfg.glcm.window_size, "texture window size");
  features->add_option("--offset-dx", features_cfg.glcm.offset_dx, "co-occurrence dx");
  features->add_option("--offset-dy", features_cfg.glcm.offset_dy, "co-occurrence dy");

  // smooth
  lcfuse::SmoothConfig smooth_cfg;
  CLI::App* smooth = app.add_subcommand("smooth", "gap-fill and smooth a time-series stack");
  smooth->add_option("--series", smooth_cfg.series, "time-series stack")->required();
  smooth->add_option("--out", smooth_cfg.out, "write smoothed stack");
  smooth->add_option("--missing-out", smooth_cfg.missing_out,
                     "write missing-fraction raster");
  smooth->add_option("--window", smooth_cfg.window, "smoothing window (odd)");
  smooth->add_option("--order", smooth_cfg.order, "polynomial order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return lcfuse::kExitUsageError;
  }

  if (app.got_subcommand(fuse)) return lcfuse::run_fuse(fuse_cfg, std::cout, std::cerr);
  if (app.got_subcommand(assess))
    return lcfuse::run_assess(assess_cfg, std::cout, std::cerr);
  if (app.got_subcommand(synth)) return lcfuse::run_synth(synth_cfg, std::cout, std::cerr);
  if (app.got_subcommand(unmix)) return lcfuse::run_unmix(unmix_cfg, std::cout, std::cerr);
  if (app.got_subcommand(features))
    return lcfuse::run_features(features_cfg, std::cout, std::cerr);
  if (app.got_subcommand(smooth))
    return lcfuse::run_smooth(smooth_cfg, std::cout, std::cerr);
  return lcfuse::kExitUsageError;
}
