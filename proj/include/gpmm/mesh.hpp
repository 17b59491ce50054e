#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "gpmm/geometry.hpp"

namespace gpmm {

// Triangle surface with coordinates in millimeters. Columns of `vertices`
// are points, columns of `triangles` are vertex index triples. `colors` is
// either empty or holds one RGB column in [0,1] per vertex.
struct TriangleMesh {
  Eigen::Matrix3Xd vertices;
  Eigen::Matrix3Xi triangles;
  Eigen::Matrix3Xd colors;

  Eigen::Index vertex_count() const { return vertices.cols(); }
  Eigen::Index triangle_count() const { return triangles.cols(); }
  bool has_colors() const { return colors.cols() > 0; }
};

// Throws Error on out-of-range indices, zero-area triangles, or a color
// array whose length does not match the vertex count.
void validate_mesh(const TriangleMesh& mesh);

// Vertices incident to an edge used by exactly one triangle, ascending.
std::vector<int> boundary_vertices(const TriangleMesh& mesh);

// Per-vertex flags, true when the vertex lies on a boundary edge.
std::vector<bool> boundary_vertex_flags(const TriangleMesh& mesh);

struct SurfacePoint {
  Vec3 point = Vec3::Zero();
  int triangle = -1;
  Vec3 barycentric = Vec3::Zero();
  bool on_boundary = false;
};

// Barycentric interpolation of a per-vertex 3-vector field.
Vec3 interpolate_field(const Eigen::Matrix3Xd& field, const TriangleMesh& mesh,
                       const SurfacePoint& sp);

using Polyline3 = std::vector<Vec3>;  // at least 2 points

// Closest point over all segments; ties go to the earliest segment.
Vec3 closest_point_on_polyline(const Polyline3& line, const Vec3& query);

struct Landmark {
  std::string id;
  Vec3 point;
};

struct LandmarkSet {
  std::vector<Landmark> entries;

  const Landmark* find(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id) != nullptr; }
  std::size_t size() const { return entries.size(); }
  void add(std::string id, const Vec3& point);  // throws on duplicate id
};

}  // namespace gpmm
