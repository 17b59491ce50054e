#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gpmm/aabb_tree.hpp"
#include "gpmm/geometry.hpp"

namespace gpmm {

// Symmetric positive semi-definite covariance function over R^3 points.
// Evaluation is pure; kernel objects are immutable and freely shared.
class ScalarKernel {
 public:
  virtual ~ScalarKernel() = default;
  virtual double operator()(const Vec3& x, const Vec3& y) const = 0;
};
using ScalarKernelPtr = std::shared_ptr<const ScalarKernel>;

// 3x3-matrix-valued covariance function, block-symmetric:
// K(x,y) = K(y,x)^T.
class MatrixKernel {
 public:
  virtual ~MatrixKernel() = default;
  virtual Mat3 operator()(const Vec3& x, const Vec3& y) const = 0;

  // Non-null when the kernel equals s(x,y) * I for a scalar kernel s.
  virtual ScalarKernelPtr isotropic_part() const { return nullptr; }
};
using MatrixKernelPtr = std::shared_ptr<const MatrixKernel>;

// Centered uniform cubic B-spline, support [-2,2], partition of unity.
double cubic_bspline(double t);

// Single-level lattice B-spline kernel at scale level j (negative = coarse):
//   k_j(x,y) = sum_k 2^(2-j) psi(2^j x - k) psi(2^j y - k),
// with psi the tensor product of cubic B-splines. Coordinates in mm; the
// kernel vanishes when any axis distance reaches 4 * 2^(-j).
ScalarKernelPtr bspline_level_kernel(int level);

// scaling * exp(-|x-y|^2 / sigma^2)
ScalarKernelPtr squared_exponential(double scaling, double sigma);

ScalarKernelPtr zero_scalar_kernel();

// Combinators (closed under composition, PSD preserved).
ScalarKernelPtr add(ScalarKernelPtr g, ScalarKernelPtr h);
ScalarKernelPtr scale(double factor, ScalarKernelPtr g);  // factor >= 0
ScalarKernelPtr multiply(ScalarKernelPtr g, ScalarKernelPtr h);
ScalarKernelPtr outer(std::function<double(const Vec3&)> f);  // f(x) f(y)

MatrixKernelPtr add(MatrixKernelPtr g, MatrixKernelPtr h);
MatrixKernelPtr scale(double factor, MatrixKernelPtr g);
MatrixKernelPtr isotropic(ScalarKernelPtr g);  // s(x,y) * I
MatrixKernelPtr zero_matrix_kernel();

// Mirror-symmetric matrix kernel about the x1=0 plane:
//   K(x,y) = I k(x,y) + diag(-1,1,1) k(x, ybar),  ybar = (-y1, y2, y3).
// Valid (PSD, block-symmetric) for base kernels invariant under mirroring
// both arguments, e.g. radial or lattice kernels.
MatrixKernelPtr mirror_symmetrize(ScalarKernelPtr k);
// Convenience: applies the construction to the scalar part of an isotropic
// matrix kernel; throws for anisotropic inputs.
MatrixKernelPtr mirror_symmetrize(const MatrixKernelPtr& k);

// Smooth per-point weight in [0,1] over a reference surface, stored as
// per-vertex weights and interpolated barycentrically.
class IndicatorMap {
 public:
  IndicatorMap(ReferencePtr surface, Eigen::VectorXd vertex_weights);
  double operator()(const Vec3& x) const;
  double at_vertex(Eigen::Index v) const { return weights_[v]; }

 private:
  ReferencePtr surface_;
  Eigen::VectorXd weights_;
};

// Isotropic matrix kernel sum_j chi_j(x) chi_j(y) k_j(x,y).
struct VaryingLevel {
  ScalarKernelPtr kernel;
  IndicatorMap indicator;
};
ScalarKernelPtr spatially_varying_scalar(std::vector<VaryingLevel> levels);
MatrixKernelPtr spatially_varying(std::vector<VaryingLevel> levels);

// Multi-scale B-spline kernel I * sum_j s_j k_j for j in [j_lo, j_hi].
MatrixKernelPtr multiscale_bspline(int j_lo, int j_hi,
                                   const std::vector<double>& scales);

// Per-vertex displacement field on the reference (mm), one per example.
using DeformationPrototype = Eigen::Matrix3Xd;

// Empirical mean and covariance function of n >= 2 prototype fields,
// interpolated barycentrically off-vertex.
struct SampleCovariance {
  Eigen::Matrix3Xd mean;  // 3 x vertex_count
  MatrixKernelPtr kernel;
};
SampleCovariance sample_covariance_kernel(ReferencePtr surface,
                                          const std::vector<DeformationPrototype>& prototypes);

// Mean field plus covariance; the assembled face prior and the kernel
// configuration parser both produce this.
struct FieldPrior {
  Eigen::Matrix3Xd mean;  // 3 x n, or empty for the zero mean
  MatrixKernelPtr kernel;
};

// Combined prior: kernel = expression.kernel + symmetrized smooth kernel,
// mean = expression mean over the zero base mean.
FieldPrior face_prior_kernel(const MatrixKernelPtr& symmetrized_smooth,
                             const SampleCovariance& expression);

// Gram matrix of a scalar kernel on a point set (n x n, exactly symmetric).
Eigen::MatrixXd gram(const ScalarKernel& k, const Eigen::Matrix3Xd& points);

// Block Gram of a matrix kernel: rows 3i..3i+2, cols 3j..3j+2 hold
// K(a_i, b_j). The one-argument form mirrors blocks for exact symmetry.
Eigen::MatrixXd gram(const MatrixKernel& k, const Eigen::Matrix3Xd& points);
Eigen::MatrixXd gram(const MatrixKernel& k, const Eigen::Matrix3Xd& a,
                     const Eigen::Matrix3Xd& b);

}  // namespace gpmm
