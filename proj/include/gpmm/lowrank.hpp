#pragma once

#include <cstdint>
#include <vector>

#include "gpmm/aabb_tree.hpp"
#include "gpmm/kernels.hpp"

namespace gpmm {

// Truncated Karhunen-Loeve expansion of a Gaussian process over a reference
// surface: u(alpha, x) = mean(x) + sum_i alpha_i sqrt(variances[i]) basis_i(x).
// Basis columns are orthonormal over the stacked vertex discretization and
// variances are sorted descending. Immutable after construction.
struct LowRankGP {
  ReferencePtr reference;
  Eigen::Matrix3Xd mean;      // 3 x n
  Eigen::MatrixXd basis;      // 3n x r, orthonormal columns
  Eigen::VectorXd variances;  // r, descending, non-negative

  Eigen::Index rank() const { return variances.size(); }
  Eigen::Index vertex_count() const { return mean.cols(); }

  Vec3 mean_at(const SurfacePoint& sp) const;
  // 3 x r matrix whose column i is basis_i interpolated at sp.
  Eigen::MatrixXd basis_at(const SurfacePoint& sp) const;

  Vec3 evaluate(const Eigen::VectorXd& alpha, const SurfacePoint& sp) const;
  Vec3 evaluate_vertex(const Eigen::VectorXd& alpha, Eigen::Index vertex) const;
  // Field at every vertex; exactly linear in alpha.
  Eigen::Matrix3Xd evaluate_all(const Eigen::VectorXd& alpha) const;

  // Covariance of the modeled field at a vertex: sum_i variances[i] b b^T.
  Mat3 pointwise_covariance(Eigen::Index vertex) const;

  // Coefficients whose field best approximates `field` at the vertices
  // (orthogonal projection; zero for vanished variances).
  Eigen::VectorXd project(const Eigen::Matrix3Xd& field) const;
};

struct NystromOptions {
  int points = 0;                   // sample count m; 0 = all vertices
  int rank = 0;                     // hard cap; 0 = variance fraction only
  double variance_fraction = 0.99;  // retained-variance target
  bool uniform_random = false;      // default: farthest-point from vertex 0
  std::uint64_t seed = 0;           // used by uniform_random sampling
};

struct LowRankBuild {
  LowRankGP model;
  double retained_variance = 1.0;   // kept spectrum mass / full spectrum mass
  int nystrom_points = 0;
};

// Builds the truncated KL expansion of (mean, kernel) by eigendecomposition
// of the Gram matrix on m sampled vertices, Nystrom-extended to all vertices
// and re-orthonormalized. An empty mean is treated as zero. Throws
// NumericalError when the Gram matrix is indefinite beyond tolerance.
LowRankBuild build_low_rank(const MatrixKernel& kernel, const Eigen::Matrix3Xd& mean,
                            ReferencePtr reference, const NystromOptions& options);

// r independent standard-normal draws, reproducible per seed on any platform.
Eigen::VectorXd sample_coefficients(const LowRankGP& gp, std::uint64_t seed);

// Log prior density up to the normalization constant: -|alpha|^2.
double log_prior(const Eigen::VectorXd& alpha);

// Deformation at a reference point observed with isotropic Gaussian noise.
struct LandmarkObservation {
  Vec3 reference_point = Vec3::Zero();
  Vec3 deformation = Vec3::Zero();
  double sigma = 1.0;  // mm, > 0
};

// Gaussian regression in coefficient space, re-orthogonalized back into KL
// form. Pointwise variance never exceeds the prior's.
LowRankGP posterior(const LowRankGP& gp, const std::vector<LandmarkObservation>& observations);

// Deterministic farthest-point sample of m vertex indices, seeded at vertex 0.
std::vector<Eigen::Index> farthest_point_sample(const TriangleMesh& mesh, int m);

}  // namespace gpmm
