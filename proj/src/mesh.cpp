#include "gpmm/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <limits>
#include <map>
#include <utility>

#include "gpmm/error.hpp"

namespace gpmm {

void validate_mesh(const TriangleMesh& mesh) {
  const Eigen::Index n = mesh.vertex_count();
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    const Eigen::Vector3i tri = mesh.triangles.col(t);
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= n) {
        throw Error("triangle " + std::to_string(t) + " references vertex " +
                    std::to_string(tri[k]) + " but mesh has " +
                    std::to_string(n) + " vertices");
      }
    }
    const Vec3 a = mesh.vertices.col(tri[0]);
    const Vec3 ab = mesh.vertices.col(tri[1]) - a;
    const Vec3 ac = mesh.vertices.col(tri[2]) - a;
    if (ab.cross(ac).norm() == 0.0) {
      throw Error("triangle " + std::to_string(t) + " is degenerate (zero area)");
    }
  }
  if (mesh.colors.cols() != 0 && mesh.colors.cols() != n) {
    throw Error("color count " + std::to_string(mesh.colors.cols()) +
                " does not match vertex count " + std::to_string(n));
  }
}

namespace {

// Undirected edge -> number of incident triangles.
std::map<std::pair<int, int>, int> edge_use_counts(const TriangleMesh& mesh) {
  std::map<std::pair<int, int>, int> counts;
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    const Eigen::Vector3i tri = mesh.triangles.col(t);
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++counts[{a, b}];
    }
  }
  return counts;
}

}  // namespace

std::vector<bool> boundary_vertex_flags(const TriangleMesh& mesh) {
  std::vector<bool> flags(static_cast<std::size_t>(mesh.vertex_count()), false);
  for (const auto& [edge, count] : edge_use_counts(mesh)) {
    if (count == 1) {
      flags[static_cast<std::size_t>(edge.first)] = true;
      flags[static_cast<std::size_t>(edge.second)] = true;
    }
  }
  return flags;
}

std::vector<int> boundary_vertices(const TriangleMesh& mesh) {
  const std::vector<bool> flags = boundary_vertex_flags(mesh);
  std::vector<int> result;
  for (std::size_t v = 0; v < flags.size(); ++v) {
    if (flags[v]) result.push_back(static_cast<int>(v));
  }
  return result;
}

Vec3 interpolate_field(const Eigen::Matrix3Xd& field, const TriangleMesh& mesh,
                       const SurfacePoint& sp) {
  const Eigen::Vector3i tri = mesh.triangles.col(sp.triangle);
  return sp.barycentric[0] * field.col(tri[0]) +
         sp.barycentric[1] * field.col(tri[1]) +
         sp.barycentric[2] * field.col(tri[2]);
}

Vec3 closest_point_on_polyline(const Polyline3& line, const Vec3& query) {
  if (line.size() < 2) throw Error("polyline needs at least 2 points");
  Vec3 best = line.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 1 < line.size(); ++s) {
    const Vec3 cand = closest_point_segment(query, line[s], line[s + 1]);
    const double d2 = (cand - query).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = cand;
    }
  }
  return best;
}

const Landmark* LandmarkSet::find(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void LandmarkSet::add(std::string id, const Vec3& point) {
  if (contains(id)) throw Error("duplicate landmark id: " + id);
  entries.push_back({std::move(id), point});
}

}  // namespace gpmm
