#include "gpmm/kernels.hpp"

#include <cmath>
#include <utility>

#include "gpmm/error.hpp"

namespace gpmm {

double cubic_bspline(double t) {
  t = std::abs(t);
  if (t >= 2.0) return 0.0;
  if (t >= 1.0) {
    const double s = 2.0 - t;
    return s * s * s / 6.0;
  }
  return 2.0 / 3.0 - t * t * (1.0 - 0.5 * t);
}

namespace {

class BsplineLevelKernel final : public ScalarKernel {
 public:
  explicit BsplineLevelKernel(int level)
      : to_lattice_(std::ldexp(1.0, level)), coeff_(std::ldexp(1.0, 2 - level)) {}

  double operator()(const Vec3& x, const Vec3& y) const override {
    double result = coeff_;
    for (int axis = 0; axis < 3; ++axis) {
      const double u = x[axis] * to_lattice_;
      const double v = y[axis] * to_lattice_;
      // Lattice cells where both spline supports are nonzero.
      const long lo = static_cast<long>(std::ceil(std::max(u, v) - 2.0));
      const long hi = static_cast<long>(std::floor(std::min(u, v) + 2.0));
      if (lo > hi) return 0.0;
      double sum = 0.0;
      for (long k = lo; k <= hi; ++k) {
        const double kk = static_cast<double>(k);
        sum += cubic_bspline(u - kk) * cubic_bspline(v - kk);
      }
      result *= sum;
    }
    return result;
  }

 private:
  double to_lattice_;
  double coeff_;
};

class SquaredExponentialKernel final : public ScalarKernel {
 public:
  SquaredExponentialKernel(double scaling, double sigma)
      : scaling_(scaling), inv_sigma2_(1.0 / (sigma * sigma)) {}

  double operator()(const Vec3& x, const Vec3& y) const override {
    return scaling_ * std::exp(-(x - y).squaredNorm() * inv_sigma2_);
  }

 private:
  double scaling_;
  double inv_sigma2_;
};

class ZeroScalarKernel final : public ScalarKernel {
 public:
  double operator()(const Vec3&, const Vec3&) const override { return 0.0; }
};

class SumScalarKernel final : public ScalarKernel {
 public:
  SumScalarKernel(ScalarKernelPtr g, ScalarKernelPtr h)
      : g_(std::move(g)), h_(std::move(h)) {}
  double operator()(const Vec3& x, const Vec3& y) const override {
    return (*g_)(x, y) + (*h_)(x, y);
  }

 private:
  ScalarKernelPtr g_, h_;
};

class ScaledScalarKernel final : public ScalarKernel {
 public:
  ScaledScalarKernel(double factor, ScalarKernelPtr g)
      : factor_(factor), g_(std::move(g)) {}
  double operator()(const Vec3& x, const Vec3& y) const override {
    return factor_ * (*g_)(x, y);
  }

 private:
  double factor_;
  ScalarKernelPtr g_;
};

class ProductScalarKernel final : public ScalarKernel {
 public:
  ProductScalarKernel(ScalarKernelPtr g, ScalarKernelPtr h)
      : g_(std::move(g)), h_(std::move(h)) {}
  double operator()(const Vec3& x, const Vec3& y) const override {
    return (*g_)(x, y) * (*h_)(x, y);
  }

 private:
  ScalarKernelPtr g_, h_;
};

class OuterScalarKernel final : public ScalarKernel {
 public:
  explicit OuterScalarKernel(std::function<double(const Vec3&)> f) : f_(std::move(f)) {}
  double operator()(const Vec3& x, const Vec3& y) const override {
    return f_(x) * f_(y);
  }

 private:
  std::function<double(const Vec3&)> f_;
};

class IsotropicMatrixKernel final : public MatrixKernel {
 public:
  explicit IsotropicMatrixKernel(ScalarKernelPtr g) : g_(std::move(g)) {}
  Mat3 operator()(const Vec3& x, const Vec3& y) const override {
    return (*g_)(x, y) * Mat3::Identity();
  }
  ScalarKernelPtr isotropic_part() const override { return g_; }

 private:
  ScalarKernelPtr g_;
};

class SumMatrixKernel final : public MatrixKernel {
 public:
  SumMatrixKernel(MatrixKernelPtr g, MatrixKernelPtr h)
      : g_(std::move(g)), h_(std::move(h)) {}
  Mat3 operator()(const Vec3& x, const Vec3& y) const override {
    return (*g_)(x, y) + (*h_)(x, y);
  }
  ScalarKernelPtr isotropic_part() const override {
    auto gs = g_->isotropic_part();
    auto hs = h_->isotropic_part();
    if (gs && hs) return add(std::move(gs), std::move(hs));
    return nullptr;
  }

 private:
  MatrixKernelPtr g_, h_;
};

class ScaledMatrixKernel final : public MatrixKernel {
 public:
  ScaledMatrixKernel(double factor, MatrixKernelPtr g)
      : factor_(factor), g_(std::move(g)) {}
  Mat3 operator()(const Vec3& x, const Vec3& y) const override {
    return factor_ * (*g_)(x, y);
  }
  ScalarKernelPtr isotropic_part() const override {
    if (auto gs = g_->isotropic_part()) return scale(factor_, std::move(gs));
    return nullptr;
  }

 private:
  double factor_;
  MatrixKernelPtr g_;
};

class MirrorSymmetricKernel final : public MatrixKernel {
 public:
  explicit MirrorSymmetricKernel(ScalarKernelPtr k) : k_(std::move(k)) {}
  Mat3 operator()(const Vec3& x, const Vec3& y) const override {
    const double direct = (*k_)(x, y);
    const double mirrored = (*k_)(x, Vec3(-y[0], y[1], y[2]));
    Mat3 result = Mat3::Zero();
    result(0, 0) = direct - mirrored;
    result(1, 1) = direct + mirrored;
    result(2, 2) = direct + mirrored;
    return result;
  }

 private:
  ScalarKernelPtr k_;
};

}  // namespace

ScalarKernelPtr bspline_level_kernel(int level) {
  return std::make_shared<BsplineLevelKernel>(level);
}

ScalarKernelPtr squared_exponential(double scaling, double sigma) {
  if (scaling <= 0.0 || sigma <= 0.0)
    throw Error("squared_exponential: scaling and sigma must be positive");
  return std::make_shared<SquaredExponentialKernel>(scaling, sigma);
}

ScalarKernelPtr zero_scalar_kernel() { return std::make_shared<ZeroScalarKernel>(); }

ScalarKernelPtr add(ScalarKernelPtr g, ScalarKernelPtr h) {
  return std::make_shared<SumScalarKernel>(std::move(g), std::move(h));
}

ScalarKernelPtr scale(double factor, ScalarKernelPtr g) {
  if (factor < 0.0) throw Error("scale: factor must be non-negative");
  return std::make_shared<ScaledScalarKernel>(factor, std::move(g));
}

ScalarKernelPtr multiply(ScalarKernelPtr g, ScalarKernelPtr h) {
  return std::make_shared<ProductScalarKernel>(std::move(g), std::move(h));
}

ScalarKernelPtr outer(std::function<double(const Vec3&)> f) {
  return std::make_shared<OuterScalarKernel>(std::move(f));
}

MatrixKernelPtr add(MatrixKernelPtr g, MatrixKernelPtr h) {
  return std::make_shared<SumMatrixKernel>(std::move(g), std::move(h));
}

MatrixKernelPtr scale(double factor, MatrixKernelPtr g) {
  if (factor < 0.0) throw Error("scale: factor must be non-negative");
  return std::make_shared<ScaledMatrixKernel>(factor, std::move(g));
}

MatrixKernelPtr isotropic(ScalarKernelPtr g) {
  return std::make_shared<IsotropicMatrixKernel>(std::move(g));
}

MatrixKernelPtr zero_matrix_kernel() { return isotropic(zero_scalar_kernel()); }

MatrixKernelPtr mirror_symmetrize(ScalarKernelPtr k) {
  return std::make_shared<MirrorSymmetricKernel>(std::move(k));
}

MatrixKernelPtr mirror_symmetrize(const MatrixKernelPtr& k) {
  auto scalar = k->isotropic_part();
  if (!scalar)
    throw Error("mirror_symmetrize: matrix kernel has no isotropic scalar part");
  return mirror_symmetrize(std::move(scalar));
}

IndicatorMap::IndicatorMap(ReferencePtr surface, Eigen::VectorXd vertex_weights)
    : surface_(std::move(surface)), weights_(std::move(vertex_weights)) {
  if (!surface_) throw Error("IndicatorMap: null surface");
  if (weights_.size() != surface_->mesh().vertex_count())
    throw Error("IndicatorMap: weight count " + std::to_string(weights_.size()) +
                " does not match vertex count " +
                std::to_string(surface_->mesh().vertex_count()));
  weights_ = weights_.cwiseMax(0.0).cwiseMin(1.0);
}

double IndicatorMap::operator()(const Vec3& x) const {
  const SurfacePoint sp = surface_->locate(x);
  const Eigen::Vector3i tri = surface_->mesh().triangles.col(sp.triangle);
  const double w = sp.barycentric[0] * weights_[tri[0]] +
                   sp.barycentric[1] * weights_[tri[1]] +
                   sp.barycentric[2] * weights_[tri[2]];
  return std::min(1.0, std::max(0.0, w));
}

namespace {

class SpatiallyVaryingKernel final : public ScalarKernel {
 public:
  explicit SpatiallyVaryingKernel(std::vector<VaryingLevel> levels)
      : levels_(std::move(levels)) {}
  double operator()(const Vec3& x, const Vec3& y) const override {
    double sum = 0.0;
    for (const VaryingLevel& level : levels_) {
      const double wx = level.indicator(x);
      if (wx == 0.0) continue;
      const double wy = level.indicator(y);
      if (wy == 0.0) continue;
      sum += wx * wy * (*level.kernel)(x, y);
    }
    return sum;
  }

 private:
  std::vector<VaryingLevel> levels_;
};

// Deviations from the prototype mean, interpolated on the surface.
class SampleCovarianceKernel final : public MatrixKernel {
 public:
  SampleCovarianceKernel(ReferencePtr surface, std::vector<Eigen::Matrix3Xd> deviations)
      : surface_(std::move(surface)), deviations_(std::move(deviations)) {}

  Mat3 operator()(const Vec3& x, const Vec3& y) const override {
    const SurfacePoint sx = surface_->locate(x);
    const SurfacePoint sy = surface_->locate(y);
    Mat3 sum = Mat3::Zero();
    for (const auto& dev : deviations_) {
      const Vec3 dx = interpolate_field(dev, surface_->mesh(), sx);
      const Vec3 dy = interpolate_field(dev, surface_->mesh(), sy);
      sum += dx * dy.transpose();
    }
    return sum / static_cast<double>(deviations_.size() - 1);
  }

 private:
  ReferencePtr surface_;
  std::vector<Eigen::Matrix3Xd> deviations_;
};

}  // namespace

ScalarKernelPtr spatially_varying_scalar(std::vector<VaryingLevel> levels) {
  if (levels.empty()) throw Error("spatially_varying: empty level list");
  return std::make_shared<SpatiallyVaryingKernel>(std::move(levels));
}

MatrixKernelPtr spatially_varying(std::vector<VaryingLevel> levels) {
  return isotropic(spatially_varying_scalar(std::move(levels)));
}

MatrixKernelPtr multiscale_bspline(int j_lo, int j_hi,
                                   const std::vector<double>& scales) {
  if (j_lo > j_hi) throw Error("multiscale_bspline: j_lo must be <= j_hi");
  const std::size_t levels = static_cast<std::size_t>(j_hi - j_lo + 1);
  if (scales.size() != levels)
    throw Error("multiscale_bspline: expected " + std::to_string(levels) +
                " scales, got " + std::to_string(scales.size()));
  ScalarKernelPtr sum = scale(scales[0], bspline_level_kernel(j_lo));
  for (std::size_t i = 1; i < levels; ++i) {
    sum = add(std::move(sum), scale(scales[i], bspline_level_kernel(j_lo + static_cast<int>(i))));
  }
  return isotropic(std::move(sum));
}

SampleCovariance sample_covariance_kernel(
    ReferencePtr surface, const std::vector<DeformationPrototype>& prototypes) {
  if (prototypes.size() < 2)
    throw Error("sample_covariance_kernel: need at least 2 prototypes, got " +
                std::to_string(prototypes.size()));
  const Eigen::Index n = surface->mesh().vertex_count();
  for (std::size_t i = 0; i < prototypes.size(); ++i) {
    if (prototypes[i].cols() != n)
      throw Error("sample_covariance_kernel: prototype " + std::to_string(i) +
                  " has " + std::to_string(prototypes[i].cols()) +
                  " vertices, reference has " + std::to_string(n));
  }

  SampleCovariance result;
  result.mean = Eigen::Matrix3Xd::Zero(3, n);
  for (const auto& proto : prototypes) result.mean += proto;
  result.mean /= static_cast<double>(prototypes.size());

  std::vector<Eigen::Matrix3Xd> deviations;
  deviations.reserve(prototypes.size());
  for (const auto& proto : prototypes) deviations.push_back(proto - result.mean);
  result.kernel =
      std::make_shared<SampleCovarianceKernel>(std::move(surface), std::move(deviations));
  return result;
}

FieldPrior face_prior_kernel(const MatrixKernelPtr& symmetrized_smooth,
                             const SampleCovariance& expression) {
  FieldPrior prior;
  prior.mean = expression.mean;
  prior.kernel = add(expression.kernel, symmetrized_smooth);
  return prior;
}

Eigen::MatrixXd gram(const ScalarKernel& k, const Eigen::Matrix3Xd& points) {
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = k(points.col(i), points.col(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Eigen::MatrixXd gram(const MatrixKernel& k, const Eigen::Matrix3Xd& points) {
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd g(3 * n, 3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const Mat3 block = k(points.col(i), points.col(j));
      g.block<3, 3>(3 * i, 3 * j) = block;
      if (j != i) g.block<3, 3>(3 * j, 3 * i) = block.transpose();
    }
  }
  return g;
}

Eigen::MatrixXd gram(const MatrixKernel& k, const Eigen::Matrix3Xd& a,
                     const Eigen::Matrix3Xd& b) {
  Eigen::MatrixXd g(3 * a.cols(), 3 * b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      g.block<3, 3>(3 * i, 3 * j) = k(a.col(i), b.col(j));
    }
  }
  return g;
}

}  // namespace gpmm
