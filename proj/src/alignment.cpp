#include "gpmm/alignment.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include "gpmm/error.hpp"

namespace gpmm {

TriangleMesh SimilarityTransform::apply(const TriangleMesh& mesh) const {
  TriangleMesh out = mesh;
  out.vertices = (scale * (rotation * mesh.vertices)).colwise() + translation;
  return out;
}

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -inv.scale * (inv.rotation * translation);
  return inv;
}

// Umeyama closed form: R from the SVD of the cross-covariance, scale from
// the singular values over the source variance.
SimilarityTransform rigid_align(const Eigen::Matrix3Xd& source,
                                const Eigen::Matrix3Xd& target) {
  const Eigen::Index n = source.cols();
  if (n != target.cols()) throw Error("rigid_align: point count mismatch");
  if (n < 3) throw Error("rigid_align: need at least 3 correspondences, got " +
                         std::to_string(n));

  const Vec3 mu_s = source.rowwise().mean();
  const Vec3 mu_t = target.rowwise().mean();
  const Eigen::Matrix3Xd ds = source.colwise() - mu_s;
  const Eigen::Matrix3Xd dt = target.colwise() - mu_t;

  const double var_s = ds.squaredNorm() / static_cast<double>(n);
  const Mat3 sigma = dt * ds.transpose() / static_cast<double>(n);

  Eigen::JacobiSVD<Mat3> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (var_s == 0.0 || sv[1] <= 1e-9 * sv[0]) {
    throw Error("rigid_align: degenerate (collinear or coincident) configuration");
  }

  Vec3 signs = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) signs[2] = -1.0;

  SimilarityTransform t;
  t.rotation = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
  t.scale = sv.dot(signs) / var_s;
  t.translation = mu_t - t.scale * (t.rotation * mu_s);
  return t;
}

SimilarityTransform rigid_align(const LandmarkSet& source, const LandmarkSet& target) {
  std::vector<const Landmark*> matches;
  for (const auto& entry : source.entries) {
    if (target.contains(entry.id)) matches.push_back(&entry);
  }
  Eigen::Matrix3Xd s(3, static_cast<Eigen::Index>(matches.size()));
  Eigen::Matrix3Xd t(3, static_cast<Eigen::Index>(matches.size()));
  for (std::size_t i = 0; i < matches.size(); ++i) {
    s.col(static_cast<Eigen::Index>(i)) = matches[i]->point;
    t.col(static_cast<Eigen::Index>(i)) = target.find(matches[i]->id)->point;
  }
  return rigid_align(s, t);
}

}  // namespace gpmm
