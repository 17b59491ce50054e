#pragma once

#include "gpmm/mesh.hpp"

namespace gpmm {

struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  TriangleMesh apply(const TriangleMesh& mesh) const;
  SimilarityTransform inverse() const;
};

// Least-squares similarity transform mapping matching source landmarks onto
// target landmarks (matched by id). Throws with fewer than 3 correspondences
// or a collinear configuration.
SimilarityTransform rigid_align(const LandmarkSet& source, const LandmarkSet& target);

// Point-set variant; columns of source/target correspond pairwise.
SimilarityTransform rigid_align(const Eigen::Matrix3Xd& source,
                                const Eigen::Matrix3Xd& target);

}  // namespace gpmm
