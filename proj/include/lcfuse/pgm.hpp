#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lcfuse/align.hpp"
#include "lcfuse/error.hpp"
#include "lcfuse/parallel.hpp"
#include "lcfuse/raster.hpp"

namespace lcfuse {

// Per-pixel fusion of class-probability estimates from a primary and a
// secondary source. The child variable copies one of its parents: it agrees
// with both when they agree, otherwise it follows the primary parent with
// probability keep_weight and the secondary with 1 - keep_weight. keep_weight
// ranges over [0.5, 1]: 1 means the secondary source is ignored, 0.5 means
// the two sources are weighted equally.

/// Tabular form of the copy-one-parent conditional distribution.
struct FusionCpd {
  int num_classes = 0;
  double keep_weight = 1.0;

  double value(int child, int primary, int secondary) const {
    if (primary == secondary) return child == primary ? 1.0 : 0.0;
    if (child == primary) return keep_weight;
    if (child == secondary) return 1.0 - keep_weight;
    return 0.0;
  }
};

namespace detail {

inline void check_distribution(std::span<const double> p, const char* what) {
  require(!p.empty(), ErrorCode::InvalidArgument, "empty distribution");
  double sum = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= -1e-9, ErrorCode::UnnormalizedInput,
            std::string(what) + " has a negative or non-finite entry");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= kProbabilitySumTolerance, ErrorCode::UnnormalizedInput,
          std::string(what) + " does not sum to 1");
}

inline void normalize_in_place(std::span<double> p) {
  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
}

}  // namespace detail

/// Closed-form pairwise combination, one multiply-accumulate chain per class:
///   out_c = P_c S_c + P_c (1 - S_c) k + (1 - P_c) S_c (1 - k)
/// Writes the unnormalized values and returns their sum (which is 1 up to
/// rounding when both inputs are normalized). No input checking; this is the
/// hot path.
inline double combine_pair_raw(std::span<const double> primary,
                               std::span<const double> secondary, double keep_weight,
                               std::span<double> out) {
  const double k = keep_weight;
  double sum = 0.0;
  for (std::size_t c = 0; c < primary.size(); ++c) {
    const double p = primary[c];
    const double s = secondary[c];
    const double v = p * s + p * (1.0 - s) * k + (1.0 - p) * s * (1.0 - k);
    out[c] = v;
    sum += v;
  }
  return sum;
}

/// Validated combination of two normalized distributions. The result is
/// renormalized to cancel rounding drift.
inline std::vector<double> combine_pair(std::span<const double> primary,
                                        std::span<const double> secondary,
                                        double keep_weight) {
  require(primary.size() == secondary.size(), ErrorCode::DimensionMismatch,
          "class counts differ");
  require(keep_weight >= 0.5 - 1e-12 && keep_weight <= 1.0 + 1e-12,
          ErrorCode::InvalidArgument, "keep_weight must lie in [0.5, 1]");
  detail::check_distribution(primary, "primary");
  detail::check_distribution(secondary, "secondary");

  std::vector<double> p(primary.begin(), primary.end());
  std::vector<double> s(secondary.begin(), secondary.end());
  detail::normalize_in_place(p);
  detail::normalize_in_place(s);

  std::vector<double> out(p.size());
  const double sum = combine_pair_raw(p, s, keep_weight, out);
  assert(std::abs(sum - 1.0) <= 1e-9);
  for (double& v : out) v /= sum;
  return out;
}

/// Smallest class index attaining the maximum probability.
inline int marginal_map(std::span<const double> posterior) {
  require(!posterior.empty(), ErrorCode::InvalidArgument, "empty distribution");
  int best = 0;
  for (int c = 1; c < static_cast<int>(posterior.size()); ++c)
    if (posterior[c] > posterior[best]) best = c;
  return best;
}

/// Everything needed to fuse one pixel: source priors, the data-quality
/// weights, and which stages apply.
struct PixelModel {
  std::vector<double> prior_a;  // primary fine-grid source
  std::vector<double> prior_b;  // secondary fine-grid source (if has_b)
  std::vector<double> prior_m;  // coarse-grid source (if apply_m)
  double cloud_fraction = 0.0;  // f: how much to favor A over B
  double reliability = 0.0;     // w: how much to trust the coarse source
  bool has_b = false;
  bool apply_m = false;

  int num_classes() const { return static_cast<int>(prior_a.size()); }
};

/// Two-step elimination: A and B combine into the intermediate result with
/// keep weight 1 - 0.5(1 - f); that result and the coarse prior combine with
/// keep weight 1 - 0.5 w. Skipped stages pass their input through.
inline std::vector<double> fuse_pixel(const PixelModel& model) {
  require(std::isfinite(model.cloud_fraction) && model.cloud_fraction >= 0.0 &&
              model.cloud_fraction <= 1.0,
          ErrorCode::InvalidArgument, "cloud fraction must lie in [0,1]");
  require(std::isfinite(model.reliability) && model.reliability >= 0.0 &&
              model.reliability <= 1.0,
          ErrorCode::InvalidArgument, "reliability must lie in [0,1]");
  detail::check_distribution(model.prior_a, "prior_a");

  std::vector<double> intermediate;
  if (model.has_b) {
    intermediate = combine_pair(model.prior_a, model.prior_b,
                                1.0 - 0.5 * (1.0 - model.cloud_fraction));
  } else {
    intermediate.assign(model.prior_a.begin(), model.prior_a.end());
    detail::normalize_in_place(intermediate);
  }
  if (!model.apply_m) return intermediate;
  return combine_pair(intermediate, model.prior_m, 1.0 - 0.5 * model.reliability);
}

/// Reference result by brute force: sums the full joint over every
/// assignment of the per-pixel variables using the tabular conditional
/// distributions. Exponential in the class count; used to cross-check the
/// closed-form path.
inline std::vector<double> joint_enumeration_oracle(const PixelModel& model) {
  const int c = model.num_classes();
  require(c <= 16, ErrorCode::TooManyClasses, "enumeration limited to 16 classes");
  detail::check_distribution(model.prior_a, "prior_a");
  if (model.has_b) detail::check_distribution(model.prior_b, "prior_b");
  if (model.apply_m) detail::check_distribution(model.prior_m, "prior_m");

  const FusionCpd cpd_ll{c, 1.0 - 0.5 * (1.0 - model.cloud_fraction)};
  const FusionCpd cpd_r{c, 1.0 - 0.5 * model.reliability};
  // Absent variables collapse to a single dummy state with an identity CPD.
  const int nb = model.has_b ? c : 1;
  const int nm = model.apply_m ? c : 1;

  std::vector<double> posterior(static_cast<std::size_t>(c), 0.0);
  for (int r = 0; r < c; ++r) {
    double acc = 0.0;
    for (int m = 0; m < nm; ++m) {
      const double pm = model.apply_m ? model.prior_m[m] : 1.0;
      for (int la = 0; la < c; ++la) {
        const double pa = model.prior_a[la];
        for (int lb = 0; lb < nb; ++lb) {
          const double pb = model.has_b ? model.prior_b[lb] : 1.0;
          for (int ll = 0; ll < c; ++ll) {
            const double p_ll =
                model.has_b ? cpd_ll.value(ll, la, lb) : (ll == la ? 1.0 : 0.0);
            const double p_r =
                model.apply_m ? cpd_r.value(r, ll, m) : (r == ll ? 1.0 : 0.0);
            acc += pm * pa * pb * p_ll * p_r;
          }
        }
      }
    }
    posterior[static_cast<std::size_t>(r)] = acc;
  }
  detail::normalize_in_place(posterior);
  return posterior;
}

// ---- raster-level fusion ----

enum class FuseMode { TwoStage, AOnly };

struct FuseInputs {
  const ProbabilityRaster* priors_a = nullptr;      // required
  const ProbabilityRaster* priors_b = nullptr;      // TwoStage
  const MaskRaster* mask_b = nullptr;               // TwoStage
  const BandRaster* cloud_fraction = nullptr;       // f map, TwoStage
  const ProbabilityRaster* priors_coarse = nullptr; // optional coarse source
  const GroupMap* groups = nullptr;                 // required with priors_coarse
  const BandRaster* coarse_missing = nullptr;       // optional m map on the coarse grid
  FuseMode mode = FuseMode::AOnly;
  int threads = 0;
};

struct FuseResult {
  ProbabilityRaster stage1;     // intermediate fine-source combination
  ProbabilityRaster posterior;
  LabelRaster labels;
  BandRaster reliability;       // w where the coarse stage applied, nodata elsewhere
};

/// Whole-raster fusion. Stage 1 combines the fine sources per pixel (or
/// passes A through in AOnly mode). Group agreement is then measured on the
/// stage-1 result, and stage 2 folds in the coarse source where it applies:
/// under cloud/shadow in TwoStage mode, everywhere in AOnly mode. Pixels the
/// coarse stage skips keep their stage-1 distribution bit-exactly. Any pixel
/// with an invalid required input becomes nodata.
inline FuseResult fuse_raster(const FuseInputs& in) {
  require(in.priors_a != nullptr, ErrorCode::MissingInput, "priors_a is required");
  const ProbabilityRaster& a = *in.priors_a;
  const int c = a.num_classes;

  if (in.mode == FuseMode::TwoStage) {
    require(in.priors_b && in.mask_b && in.cloud_fraction, ErrorCode::MissingInput,
            "two-stage mode needs priors_b, mask_b and a cloud-fraction map");
    require(in.priors_b->geometry == a.geometry &&
                in.mask_b->geometry == a.geometry &&
                in.cloud_fraction->geometry == a.geometry,
            ErrorCode::GeometryMismatch, "fine-grid inputs on different grids");
    require(in.priors_b->num_classes == c, ErrorCode::DimensionMismatch,
            "priors_a and priors_b class counts differ");
  }
  if (in.priors_coarse) {
    require(in.groups != nullptr, ErrorCode::MissingInput,
            "coarse priors need a group map");
    require(in.groups->fine_geometry == a.geometry, ErrorCode::GeometryMismatch,
            "group map fine grid does not match priors_a");
    require(in.priors_coarse->geometry == in.groups->coarse_geometry,
            ErrorCode::GeometryMismatch, "coarse priors do not match group map");
    require(in.priors_coarse->num_classes == c, ErrorCode::DimensionMismatch,
            "coarse prior class count differs");
    if (in.coarse_missing)
      require(in.coarse_missing->geometry == in.groups->coarse_geometry,
              ErrorCode::GeometryMismatch, "missing-fraction map on wrong grid");
  }

  const std::int64_t n = a.pixel_count();
  FuseResult result{ProbabilityRaster(a.geometry, c), ProbabilityRaster(a.geometry, c),
                    LabelRaster(a.geometry, c), BandRaster(a.geometry, 1)};

  // Stage 1: fine-source combination.
  parallel_for(n, in.threads, [&](std::int64_t begin, std::int64_t end) {
    std::vector<double> pa(static_cast<std::size_t>(c));
    std::vector<double> pb(static_cast<std::size_t>(c));
    std::vector<double> out(static_cast<std::size_t>(c));
    for (std::int64_t i = begin; i < end; ++i) {
      if (!a.is_valid(i)) continue;
      if (in.mode == FuseMode::AOnly) {
        // pass-through keeps A's payload bit-exact
        const float* src = a.pixel(i);
        float* dst = result.stage1.pixel(i);
        for (int k = 0; k < c; ++k) dst[k] = src[k];
        result.stage1.valid[static_cast<std::size_t>(i)] = 1;
        continue;
      }
      const float f_raw = in.cloud_fraction->value(i, 0);
      if (!in.priors_b->is_valid(i) || BandRaster::is_nodata(f_raw)) continue;
      const double f = std::clamp(static_cast<double>(f_raw), 0.0, 1.0);
      const float* fa = a.pixel(i);
      const float* fb = in.priors_b->pixel(i);
      for (int k = 0; k < c; ++k) {
        pa[k] = fa[k];
        pb[k] = fb[k];
      }
      detail::normalize_in_place(pa);
      detail::normalize_in_place(pb);
      const double sum = combine_pair_raw(pa, pb, 1.0 - 0.5 * (1.0 - f), out);
      assert(std::abs(sum - 1.0) <= 1e-9);
      for (double& v : out) v /= sum;
      result.stage1.set_distribution(i, out);
    }
  });

  // Agreement is measured on the full stage-1 raster before any stage-2 work.
  BandRaster agreement;
  if (in.priors_coarse) agreement = group_agreement(result.stage1, *in.groups);

  // Stage 2: fold in the coarse source where it applies.
  parallel_for(n, in.threads, [&](std::int64_t begin, std::int64_t end) {
    std::vector<double> pll(static_cast<std::size_t>(c));
    std::vector<double> pm(static_cast<std::size_t>(c));
    std::vector<double> out(static_cast<std::size_t>(c));
    for (std::int64_t i = begin; i < end; ++i) {
      if (!result.stage1.is_valid(i)) continue;
      const std::int32_t cell =
          in.priors_coarse ? in.groups->assignment[static_cast<std::size_t>(i)]
                           : kNoGroup;
      const bool gated_in = in.mode == FuseMode::AOnly ||
                            is_cloud_or_shadow(in.mask_b->flag(i));
      if (!in.priors_coarse || cell == kNoGroup || !gated_in) {
        const float* src = result.stage1.pixel(i);
        float* dst = result.posterior.pixel(i);
        for (int k = 0; k < c; ++k) dst[k] = src[k];
        result.posterior.valid[static_cast<std::size_t>(i)] = 1;
        continue;
      }
      if (!in.priors_coarse->is_valid(cell)) continue;  // nodata propagates
      double m = 0.0;
      if (in.coarse_missing) {
        const float mv = in.coarse_missing->value(cell, 0);
        if (!BandRaster::is_nodata(mv)) m = std::clamp(static_cast<double>(mv), 0.0, 1.0);
      }
      const double g = agreement.value(i, 0);
      const double w = reliability_weight({g, m});
      const float* fll = result.stage1.pixel(i);
      const float* fm = in.priors_coarse->pixel(cell);
      for (int k = 0; k < c; ++k) {
        pll[k] = fll[k];
        pm[k] = fm[k];
      }
      detail::normalize_in_place(pll);
      detail::normalize_in_place(pm);
      const double sum = combine_pair_raw(pll, pm, 1.0 - 0.5 * w, out);
      assert(std::abs(sum - 1.0) <= 1e-9);
      for (double& v : out) v /= sum;
      result.posterior.set_distribution(i, out);
      result.reliability.value(i, 0) = static_cast<float>(w);
    }
  });

  // Labels always reflect the written posterior payload.
  parallel_for(n, in.threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      if (!result.posterior.is_valid(i)) continue;
      const float* p = result.posterior.pixel(i);
      int best = 0;
      for (int k = 1; k < c; ++k)
        if (p[k] > p[best]) best = k;
      result.labels.labels[static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>(best);
    }
  });

  return result;
}

}  // namespace lcfuse
