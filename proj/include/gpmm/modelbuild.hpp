#pragma once

#include <string>
#include <vector>

#include "gpmm/lowrank.hpp"

namespace gpmm {

// Per-vertex RGB in [0,1] plus a binary reliability mask.
struct ColorSample {
  Eigen::Matrix3Xd colors;
  std::vector<bool> visible;  // z in the missing-data formulas
};

// PCA model over registered meshes sharing the reference topology: mean is
// the vertex-wise average (stored as a deformation from the reference),
// basis and variances come from the SVD of the centered data matrix with
// 1/(n-1) normalization. Rank <= n-1.
LowRankGP build_shape_model(const std::vector<const TriangleMesh*>& registered,
                            ReferencePtr reference);

struct ColorMean {
  Eigen::Matrix3Xd mean;             // per-vertex RGB
  std::vector<bool> fallback;        // true where no sample was visible
};

// Mean over visible samples only; vertices visible in no sample fall back
// to the reference color (flagged).
ColorMean color_mean_missing(const std::vector<ColorSample>& samples,
                             const TriangleMesh& reference);

// Missing-data covariance: mixes the empirical term where both samples are
// visible with the prior kernel elsewhere,
//   k_md(x,y) = 1/(n-1) sum_i [ z_i z'_i c_i(x,y) + (1 - z_i z'_i) k_cs(x,y) I ].
// Defined per-vertex; off-vertex arguments snap to the nearest vertex.
MatrixKernelPtr color_covariance_missing(const std::vector<ColorSample>& samples,
                                         ScalarKernelPtr color_prior,
                                         ReferencePtr reference);

struct ColorModelOptions {
  NystromOptions nystrom;
  // Paper defaults for the color smoothness prior.
  double prior_scaling = 1.0e-4;
  double prior_sigma = 10.0;  // mm
};

LowRankBuild build_color_model(const std::vector<ColorSample>& samples,
                               ReferencePtr reference, const ColorModelOptions& options);

// PCA over expression-minus-neutral difference fields; expressions[i] pairs
// with neutrals[i]. A single pair yields a rank-0 model whose mean is the
// difference field.
LowRankGP build_expression_model(const std::vector<const TriangleMesh*>& neutrals,
                                 const std::vector<const TriangleMesh*>& expressions,
                                 ReferencePtr reference);

struct MorphableModel {
  LowRankGP shape;
  LowRankGP color;
  LowRankGP expression;

  const ReferencePtr& reference() const { return shape.reference; }
};

MorphableModel assemble_model(LowRankGP shape, LowRankGP color, LowRankGP expression);

// Colored mesh instance: vertices = reference + shape(alpha_s) +
// expression(alpha_e); colors from the color model, clamped to [0,1].
TriangleMesh instance(const MorphableModel& model, const Eigen::VectorXd& shape_coeffs,
                      const Eigen::VectorXd& color_coeffs,
                      const Eigen::VectorXd& expression_coeffs);

struct RegionStat {
  std::string region;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n-1), 0 for n < 2
  int count = 0;
};

struct LandmarkReport {
  std::vector<RegionStat> regions;
  std::vector<std::string> unmatched;  // names present in only one set

  std::string table() const;  // aligned plain-text table
};

// Per-region mean and sample std of the distances between matching
// landmarks. `region_of` maps landmark name -> region name; unassigned
// names fall into "Unassigned". Region output order follows first use in
// `region_order`.
LandmarkReport evaluate_landmarks(
    const LandmarkSet& registered, const LandmarkSet& ground_truth,
    const std::vector<std::pair<std::string, std::string>>& region_of);

}  // namespace gpmm
