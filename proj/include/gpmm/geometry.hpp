#pragma once

#include <Eigen/Core>

namespace gpmm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Barycentric coordinates of the point on triangle (a,b,c) closest to p.
// Clamped regions return exact 0/1 weights, so a query at a vertex yields
// that vertex bit-for-bit.
Vec3 closest_point_triangle_barycentric(const Vec3& p, const Vec3& a,
                                        const Vec3& b, const Vec3& c);

// Closest point on segment [a,b]; optionally reports the parameter t in [0,1].
Vec3 closest_point_segment(const Vec3& p, const Vec3& a, const Vec3& b,
                           double* t_out = nullptr);

}  // namespace gpmm
