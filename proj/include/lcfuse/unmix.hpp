#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lcfuse/error.hpp"
#include "lcfuse/parallel.hpp"
#include "lcfuse/raster.hpp"

namespace lcfuse {

enum class EndmemberRole : std::uint8_t { Unassigned = 0, Cloud, Soil, Vegetation, Dark };

inline const char* role_name(EndmemberRole r) {
  switch (r) {
    case EndmemberRole::Cloud: return "cloud";
    case EndmemberRole::Soil: return "soil";
    case EndmemberRole::Vegetation: return "vegetation";
    case EndmemberRole::Dark: return "dark";
    case EndmemberRole::Unassigned: return "unassigned";
  }
  return "unassigned";
}

inline EndmemberRole role_from_name(const std::string& s) {
  if (s == "cloud") return EndmemberRole::Cloud;
  if (s == "soil") return EndmemberRole::Soil;
  if (s == "vegetation") return EndmemberRole::Vegetation;
  if (s == "dark") return EndmemberRole::Dark;
  if (s == "unassigned") return EndmemberRole::Unassigned;
  fail(ErrorCode::InvalidArgument, "unknown endmember role: " + s);
}

struct EndmemberSet {
  int num_bands = 0;
  std::vector<std::vector<double>> spectra;  // one B-vector per endmember
  std::vector<EndmemberRole> roles;

  int count() const { return static_cast<int>(spectra.size()); }

  void validate() const {
    require(count() >= 2, ErrorCode::InvalidArgument, "need at least 2 endmembers");
    require(count() <= num_bands + 1, ErrorCode::InvalidArgument,
            "simplex does not fit in band space");
    for (const auto& s : spectra)
      require(static_cast<int>(s.size()) == num_bands, ErrorCode::DimensionMismatch,
              "endmember band count mismatch");
  }
};

/// Per-pixel endmember fractions under the sum-to-one constraint. Individual
/// fractions may leave [0,1]; consumers clamp where needed.
struct AbundanceVector {
  std::vector<double> fractions;
};

// ---- principal-axis projection ----

/// Projects centered spectra onto the top `dims` principal axes. The
/// eigenvector sign is fixed so the largest-magnitude component is positive,
/// keeping the projection deterministic.
inline Eigen::MatrixXd principal_projection(const std::vector<std::vector<double>>& pixels,
                                            int dims) {
  const int n = static_cast<int>(pixels.size());
  require(n >= 1, ErrorCode::InvalidArgument, "no pixels");
  const int bands = static_cast<int>(pixels[0].size());
  require(dims >= 1 && dims <= bands, ErrorCode::InvalidArgument,
          "projection dims out of range");

  Eigen::MatrixXd x(n, bands);
  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(pixels[i].size()) == bands, ErrorCode::DimensionMismatch,
            "pixel band count mismatch");
    for (int b = 0; b < bands; ++b) x(i, b) = pixels[i][b];
  }
  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / std::max(1, n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  require(eig.info() == Eigen::Success, ErrorCode::InvalidArgument,
          "eigendecomposition failed");
  // eigenvalues ascending; take the top dims, largest first
  Eigen::MatrixXd axes(bands, dims);
  for (int d = 0; d < dims; ++d) {
    Eigen::VectorXd v = eig.eigenvectors().col(bands - 1 - d);
    int arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(d) = v;
  }
  return centered * axes;
}

namespace detail {

// |det| of the (E-1)x(E-1) edge matrix of a simplex in reduced space;
// proportional to its volume.
inline double simplex_volume_det(const Eigen::MatrixXd& reduced,
                                 std::span<const int> subset) {
  const int e = static_cast<int>(subset.size());
  Eigen::MatrixXd edges(e - 1, e - 1);
  for (int i = 0; i + 1 < e; ++i)
    edges.col(i) = (reduced.row(subset[i]) - reduced.row(subset[e - 1])).transpose();
  return std::abs(edges.determinant());
}

}  // namespace detail

namespace detail {

// Best-improvement single-vertex replacement until a full sweep changes
// nothing. Returns the final volume; vertices is updated in place.
inline double nfindr_local_search(const Eigen::MatrixXd& reduced,
                                  std::vector<int>& vertices, int max_iterations) {
  const int n = static_cast<int>(reduced.rows());
  const int e = static_cast<int>(vertices.size());
  double volume = simplex_volume_det(reduced, vertices);
  for (int pass = 0; pass < max_iterations; ++pass) {
    bool improved = false;
    for (int slot = 0; slot < e; ++slot) {
      const int original = vertices[slot];
      int best_pixel = original;
      double best_volume = volume;
      for (int p = 0; p < n; ++p) {
        if (std::find(vertices.begin(), vertices.end(), p) != vertices.end()) continue;
        vertices[slot] = p;
        const double v = simplex_volume_det(reduced, vertices);
        if (v > best_volume) {
          best_volume = v;
          best_pixel = p;
        }
      }
      vertices[slot] = best_pixel;
      if (best_pixel != original) {
        volume = best_volume;
        improved = true;
      }
    }
    if (!improved) break;
  }
  return volume;
}

}  // namespace detail

/// Maximum-simplex-volume endmember search. Spectra are projected to E-1
/// principal dimensions, then single vertices are replaced while any
/// replacement grows the simplex volume. A single start can stall in a
/// local optimum, so the search runs once from the extreme-projection seed
/// and again from num_restarts fixed-seed shuffled starts, keeping the
/// largest simplex; results stay reproducible run to run.
inline EndmemberSet nfindr_extract(const std::vector<std::vector<double>>& pixels,
                                   int num_endmembers, int max_iterations = 100,
                                   int num_restarts = 16) {
  const int n = static_cast<int>(pixels.size());
  const int e = num_endmembers;
  require(e >= 2, ErrorCode::InvalidArgument, "need at least 2 endmembers");
  require(n >= e, ErrorCode::TooFewPixels,
          "need at least " + std::to_string(e) + " pixels, got " + std::to_string(n));
  const int bands = static_cast<int>(pixels[0].size());
  require(e <= bands + 1, ErrorCode::InvalidArgument,
          "simplex does not fit in band space");

  Eigen::MatrixXd reduced = principal_projection(pixels, e - 1);

  // Seed: alternate max/min projections along each axis, skipping duplicates.
  std::vector<int> vertices;
  vertices.reserve(static_cast<std::size_t>(e));
  auto take_extreme = [&](int axis, bool take_max) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (std::find(vertices.begin(), vertices.end(), i) != vertices.end()) continue;
      if (best < 0) {
        best = i;
        continue;
      }
      const double vi = reduced(i, axis);
      const double vb = reduced(best, axis);
      if (take_max ? vi > vb : vi < vb) best = i;
    }
    if (best >= 0) vertices.push_back(best);
  };
  for (int axis = 0; static_cast<int>(vertices.size()) < e; ++axis) {
    take_extreme(axis % (e - 1), true);
    if (static_cast<int>(vertices.size()) < e) take_extreme(axis % (e - 1), false);
  }

  double volume = detail::nfindr_local_search(reduced, vertices, max_iterations);

  std::mt19937_64 restart_rng(0x6e66696e64727375ull);  // fixed, data-independent
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int r = 0; r < num_restarts; ++r) {
    std::shuffle(order.begin(), order.end(), restart_rng);
    std::vector<int> start(order.begin(), order.begin() + e);
    const double v = detail::nfindr_local_search(reduced, start, max_iterations);
    if (v > volume) {
      volume = v;
      vertices = start;
    }
  }
  // Degeneracy is judged relative to the data spread: exactly collinear
  // inputs land at rounding-noise volumes, not at literal zero.
  const double spread = reduced.cwiseAbs().maxCoeff();
  const double floor = std::pow(std::max(spread, 1e-30), e - 1) * 1e-12;
  require(volume > floor, ErrorCode::DegenerateCloud,
          "all candidate simplices are degenerate");

  EndmemberSet out;
  out.num_bands = bands;
  for (int v : vertices) out.spectra.push_back(pixels[v]);
  out.roles.assign(static_cast<std::size_t>(e), EndmemberRole::Unassigned);
  return out;
}

/// Heuristic role labelling for a 4-endmember set: cloud is the brightest
/// mean reflectance, dark the dimmest, vegetation the strongest nir-red
/// contrast among the rest, soil the remainder.
inline void assign_roles(EndmemberSet& em, int red_band, int nir_band) {
  require(em.count() == 4, ErrorCode::InvalidArgument,
          "role heuristic needs exactly 4 endmembers");
  require(red_band >= 0 && red_band < em.num_bands && nir_band >= 0 &&
              nir_band < em.num_bands,
          ErrorCode::InvalidArgument, "band index out of range");
  std::vector<double> mean(4);
  for (int i = 0; i < 4; ++i)
    mean[i] = std::accumulate(em.spectra[i].begin(), em.spectra[i].end(), 0.0) /
              em.num_bands;
  const int cloud = static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  int dark = -1;
  for (int i = 0; i < 4; ++i)
    if (i != cloud && (dark < 0 || mean[i] < mean[dark])) dark = i;
  int veg = -1;
  double best_contrast = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    if (i == cloud || i == dark) continue;
    const double c = em.spectra[i][nir_band] - em.spectra[i][red_band];
    if (c > best_contrast) {
      best_contrast = c;
      veg = i;
    }
  }
  for (int i = 0; i < 4; ++i) {
    if (i == cloud)
      em.roles[i] = EndmemberRole::Cloud;
    else if (i == dark)
      em.roles[i] = EndmemberRole::Dark;
    else if (i == veg)
      em.roles[i] = EndmemberRole::Vegetation;
    else
      em.roles[i] = EndmemberRole::Soil;
  }
}

// ---- sum-to-one constrained unmixing ----

/// Prefactored solver for min ||E a - x||^2 subject to sum(a) = 1, via the
/// KKT system. The factorization depends only on the endmembers, so one
/// solver serves a whole raster.
class ConstrainedUnmixer {
 public:
  explicit ConstrainedUnmixer(const EndmemberSet& em)
      : num_bands_(em.num_bands), count_(em.count()) {
    em.validate();
    Eigen::MatrixXd e(num_bands_, count_);
    for (int j = 0; j < count_; ++j)
      for (int b = 0; b < num_bands_; ++b) e(b, j) = em.spectra[j][b];

    // Full column rank of [E; 1^T] makes the KKT system nonsingular.
    Eigen::MatrixXd augmented(num_bands_ + 1, count_);
    augmented.topRows(num_bands_) = e;
    augmented.bottomRows(1).setOnes();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(augmented);
    require(qr.rank() == count_, ErrorCode::RankDeficient,
            "endmember matrix is rank deficient");

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(count_ + 1, count_ + 1);
    kkt.topLeftCorner(count_, count_) = 2.0 * e.transpose() * e;
    kkt.topRightCorner(count_, 1).setOnes();
    kkt.bottomLeftCorner(1, count_).setOnes();
    lu_.compute(kkt);
    et_ = e.transpose();
  }

  AbundanceVector unmix(std::span<const double> spectrum) const {
    require(static_cast<int>(spectrum.size()) == num_bands_,
            ErrorCode::DimensionMismatch, "spectrum band count mismatch");
    Eigen::VectorXd x(num_bands_);
    for (int b = 0; b < num_bands_; ++b) x(b) = spectrum[b];
    Eigen::VectorXd rhs(count_ + 1);
    rhs.head(count_) = 2.0 * et_ * x;
    rhs(count_) = 1.0;
    Eigen::VectorXd sol = lu_.solve(rhs);
    AbundanceVector a;
    a.fractions.assign(sol.data(), sol.data() + count_);
    return a;
  }

 private:
  int num_bands_;
  int count_;
  Eigen::MatrixXd et_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
};

inline AbundanceVector unmix_pixel(std::span<const double> spectrum,
                                   const EndmemberSet& em) {
  return ConstrainedUnmixer(em).unmix(spectrum);
}

/// f = (cloud + soil) / (cloud + soil + vegetation + dark) on fractions
/// clamped to [0,1]; 0 when everything clamps away.
inline double cloud_shadow_fraction(const AbundanceVector& abundance,
                                    const EndmemberSet& em) {
  require(static_cast<int>(abundance.fractions.size()) == em.count(),
          ErrorCode::DimensionMismatch, "abundance size mismatch");
  double cs = 0.0, total = 0.0;
  for (int i = 0; i < em.count(); ++i) {
    require(em.roles[i] != EndmemberRole::Unassigned, ErrorCode::InvalidArgument,
            "endmember roles must be assigned");
    const double a = std::clamp(abundance.fractions[i], 0.0, 1.0);
    total += a;
    if (em.roles[i] == EndmemberRole::Cloud || em.roles[i] == EndmemberRole::Soil)
      cs += a;
  }
  if (total == 0.0) return 0.0;
  return std::clamp(cs / total, 0.0, 1.0);
}

/// Per-pixel cloud/shadow fraction map: computed where the mask says cloud
/// or shadow, zero where clear, nodata where the mask (or spectrum) has no
/// data.
inline BandRaster fraction_raster(const BandRaster& bands, const MaskRaster& mask,
                                  const EndmemberSet& em, int threads = 0) {
  require(bands.geometry == mask.geometry, ErrorCode::GeometryMismatch,
          "bands and mask on different grids");
  require(bands.num_bands == em.num_bands, ErrorCode::DimensionMismatch,
          "band count does not match endmembers");
  ConstrainedUnmixer solver(em);

  BandRaster out(bands.geometry, 1);
  parallel_for(bands.pixel_count(), threads, [&](std::int64_t begin, std::int64_t end) {
    std::vector<double> spectrum(static_cast<std::size_t>(bands.num_bands));
    for (std::int64_t i = begin; i < end; ++i) {
      switch (mask.flag(i)) {
        case MaskFlag::Clear:
          out.value(i, 0) = 0.0f;
          break;
        case MaskFlag::NoData:
          break;  // stays nodata
        case MaskFlag::Cloud:
        case MaskFlag::Shadow: {
          bool ok = true;
          for (int b = 0; b < bands.num_bands; ++b) {
            const float v = bands.value(i, b);
            if (BandRaster::is_nodata(v)) {
              ok = false;
              break;
            }
            spectrum[static_cast<std::size_t>(b)] = v;
          }
          if (!ok) break;
          const AbundanceVector a = solver.unmix(spectrum);
          out.value(i, 0) = static_cast<float>(cloud_shadow_fraction(a, em));
          break;
        }
      }
    }
  });
  return out;
}

// ---- endmember CSV (role,b0,b1,...) ----

inline void write_endmembers(const EndmemberSet& em, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + path.string());
  out << "role";
  for (int b = 0; b < em.num_bands; ++b) out << ",b" << b;
  out << "\n";
  for (int i = 0; i < em.count(); ++i) {
    out << role_name(em.roles[i]);
    for (int b = 0; b < em.num_bands; ++b) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", em.spectra[i][b]);
      out << ',' << buf;
    }
    out << "\n";
  }
  out.flush();
  require(out.good(), ErrorCode::IoFailure, "write failed: " + path.string());
}

inline EndmemberSet read_endmembers(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoFailure, "cannot open " + path.string());
  EndmemberSet em;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("role", 0) == 0) continue;
    }
    std::istringstream ls(line);
    std::string field;
    require(static_cast<bool>(std::getline(ls, field, ',')), ErrorCode::MalformedHeader,
            "bad endmember row: " + line);
    EndmemberRole role = role_from_name(field);
    std::vector<double> spectrum;
    while (std::getline(ls, field, ',')) {
      try {
        spectrum.push_back(std::stod(field));
      } catch (const std::exception&) {
        fail(ErrorCode::MalformedHeader, "bad endmember value: " + field);
      }
    }
    require(!spectrum.empty(), ErrorCode::MalformedHeader, "endmember row has no bands");
    if (em.count() == 0) em.num_bands = static_cast<int>(spectrum.size());
    require(static_cast<int>(spectrum.size()) == em.num_bands,
            ErrorCode::MalformedHeader, "inconsistent band counts in " + path.string());
    em.spectra.push_back(std::move(spectrum));
    em.roles.push_back(role);
  }
  require(em.count() >= 2, ErrorCode::MalformedHeader,
          "endmember file has fewer than 2 rows");
  return em;
}

}  // namespace lcfuse
