#pragma once

// Procedural meshes and scratch-directory helpers shared by the test suites.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gpmm/aabb_tree.hpp"
#include "gpmm/mesh.hpp"

namespace testsupport {

inline gpmm::TriangleMesh single_triangle() {
  gpmm::TriangleMesh mesh;
  mesh.vertices.resize(3, 3);
  mesh.vertices.col(0) = gpmm::Vec3(0, 0, 0);
  mesh.vertices.col(1) = gpmm::Vec3(10, 0, 0);
  mesh.vertices.col(2) = gpmm::Vec3(0, 10, 0);
  mesh.triangles.resize(3, 1);
  mesh.triangles.col(0) = Eigen::Vector3i(0, 1, 2);
  return mesh;
}

inline gpmm::TriangleMesh tetrahedron(double edge = 10.0) {
  gpmm::TriangleMesh mesh;
  mesh.vertices.resize(3, 4);
  mesh.vertices.col(0) = gpmm::Vec3(0, 0, 0);
  mesh.vertices.col(1) = gpmm::Vec3(edge, 0, 0);
  mesh.vertices.col(2) = gpmm::Vec3(0, edge, 0);
  mesh.vertices.col(3) = gpmm::Vec3(0, 0, edge);
  mesh.triangles.resize(3, 4);
  mesh.triangles.col(0) = Eigen::Vector3i(0, 2, 1);
  mesh.triangles.col(1) = Eigen::Vector3i(0, 1, 3);
  mesh.triangles.col(2) = Eigen::Vector3i(0, 3, 2);
  mesh.triangles.col(3) = Eigen::Vector3i(1, 2, 3);
  return mesh;
}

// Watertight pole-capped sphere with rings*segments + 2 vertices.
inline gpmm::TriangleMesh uv_sphere(double radius, int rings, int segments) {
  gpmm::TriangleMesh mesh;
  const int n = rings * segments + 2;
  mesh.vertices.resize(3, n);
  mesh.vertices.col(0) = gpmm::Vec3(0, 0, radius);
  for (int r = 0; r < rings; ++r) {
    const double theta = M_PI * static_cast<double>(r + 1) / static_cast<double>(rings + 1);
    for (int s = 0; s < segments; ++s) {
      const double phi = 2.0 * M_PI * static_cast<double>(s) / static_cast<double>(segments);
      mesh.vertices.col(1 + r * segments + s) =
          radius * gpmm::Vec3(std::sin(theta) * std::cos(phi),
                              std::sin(theta) * std::sin(phi), std::cos(theta));
    }
  }
  mesh.vertices.col(n - 1) = gpmm::Vec3(0, 0, -radius);

  std::vector<Eigen::Vector3i> tris;
  auto ring_vertex = [segments](int r, int s) { return 1 + r * segments + (s % segments); };
  for (int s = 0; s < segments; ++s)
    tris.emplace_back(0, ring_vertex(0, s), ring_vertex(0, s + 1));
  for (int r = 0; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      tris.emplace_back(ring_vertex(r, s), ring_vertex(r + 1, s), ring_vertex(r + 1, s + 1));
      tris.emplace_back(ring_vertex(r, s), ring_vertex(r + 1, s + 1), ring_vertex(r, s + 1));
    }
  }
  for (int s = 0; s < segments; ++s)
    tris.emplace_back(n - 1, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s));

  mesh.triangles.resize(3, static_cast<Eigen::Index>(tris.size()));
  for (std::size_t t = 0; t < tris.size(); ++t)
    mesh.triangles.col(static_cast<Eigen::Index>(t)) = tris[t];
  return mesh;
}

// ~502-vertex sphere used for Nystrom fidelity tests.
inline gpmm::TriangleMesh sphere_500(double radius = 50.0) {
  return uv_sphere(radius, 20, 25);
}

// Exactly 2000 vertices.
inline gpmm::TriangleMesh sphere_2000(double radius = 100.0) {
  return uv_sphere(radius, 54, 37);
}

inline gpmm::TriangleMesh drop_triangle(const gpmm::TriangleMesh& mesh, Eigen::Index t) {
  gpmm::TriangleMesh out = mesh;
  out.triangles.resize(3, mesh.triangle_count() - 1);
  Eigen::Index w = 0;
  for (Eigen::Index i = 0; i < mesh.triangle_count(); ++i) {
    if (i != t) out.triangles.col(w++) = mesh.triangles.col(i);
  }
  return out;
}

// Removes the given fraction of triangles, taken as the spherical cap of
// centroids most aligned with `direction`.
inline gpmm::TriangleMesh cut_cap(const gpmm::TriangleMesh& mesh, const gpmm::Vec3& direction,
                                  double fraction) {
  const gpmm::Vec3 d = direction.normalized();
  std::vector<std::pair<double, Eigen::Index>> scored;
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    const Eigen::Vector3i tri = mesh.triangles.col(t);
    const gpmm::Vec3 centroid = (mesh.vertices.col(tri[0]) + mesh.vertices.col(tri[1]) +
                                 mesh.vertices.col(tri[2])) / 3.0;
    scored.push_back({centroid.dot(d), t});
  }
  std::sort(scored.begin(), scored.end());
  const auto keep = static_cast<std::size_t>(
      std::llround((1.0 - fraction) * static_cast<double>(scored.size())));

  gpmm::TriangleMesh out = mesh;
  out.triangles.resize(3, static_cast<Eigen::Index>(keep));
  std::vector<Eigen::Index> kept;
  for (std::size_t i = 0; i < keep; ++i) kept.push_back(scored[i].second);
  std::sort(kept.begin(), kept.end());
  for (std::size_t i = 0; i < keep; ++i)
    out.triangles.col(static_cast<Eigen::Index>(i)) = mesh.triangles.col(kept[i]);
  return out;
}

// Flat triangulated plate in the x/z plane at height y.
inline gpmm::TriangleMesh plate(double y, double x0, double x1, double z0, double z1,
                                int nx, int nz) {
  gpmm::TriangleMesh mesh;
  mesh.vertices.resize(3, nx * nz);
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < nz; ++k) {
      const double x = x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(nx - 1);
      const double z = z0 + (z1 - z0) * static_cast<double>(k) / static_cast<double>(nz - 1);
      mesh.vertices.col(i * nz + k) = gpmm::Vec3(x, y, z);
    }
  }
  std::vector<Eigen::Vector3i> tris;
  for (int i = 0; i + 1 < nx; ++i) {
    for (int k = 0; k + 1 < nz; ++k) {
      const int a = i * nz + k, b = (i + 1) * nz + k, c = (i + 1) * nz + k + 1, d = i * nz + k + 1;
      tris.emplace_back(a, b, c);
      tris.emplace_back(a, c, d);
    }
  }
  mesh.triangles.resize(3, static_cast<Eigen::Index>(tris.size()));
  for (std::size_t t = 0; t < tris.size(); ++t)
    mesh.triangles.col(static_cast<Eigen::Index>(t)) = tris[t];
  return mesh;
}

inline gpmm::TriangleMesh merge(const gpmm::TriangleMesh& a, const gpmm::TriangleMesh& b) {
  gpmm::TriangleMesh mesh;
  mesh.vertices.resize(3, a.vertex_count() + b.vertex_count());
  mesh.vertices << a.vertices, b.vertices;
  mesh.triangles.resize(3, a.triangle_count() + b.triangle_count());
  mesh.triangles << a.triangles,
      (b.triangles.array() + static_cast<int>(a.vertex_count())).matrix();
  return mesh;
}

// Two nearly touching plates, symmetric about x = 0: a stand-in for upper
// and lower lips. The lower plate is the second half of the vertices.
inline gpmm::TriangleMesh jaw_mesh(int nx = 9, int nz = 5) {
  const gpmm::TriangleMesh upper = plate(+0.5, -12.0, 12.0, 0.0, 6.0, nx, nz);
  const gpmm::TriangleMesh lower = plate(-0.5, -12.0, 12.0, 0.0, 6.0, nx, nz);
  return merge(upper, lower);
}

// Brute-force closest point over every triangle, lowest index on ties.
inline gpmm::SurfacePoint brute_force_closest(const gpmm::TriangleMesh& mesh,
                                              const gpmm::Vec3& q) {
  gpmm::SurfacePoint best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    const Eigen::Vector3i tri = mesh.triangles.col(t);
    const gpmm::Vec3 bary = gpmm::closest_point_triangle_barycentric(
        q, mesh.vertices.col(tri[0]), mesh.vertices.col(tri[1]), mesh.vertices.col(tri[2]));
    const gpmm::Vec3 p = bary[0] * mesh.vertices.col(tri[0]) +
                         bary[1] * mesh.vertices.col(tri[1]) +
                         bary[2] * mesh.vertices.col(tri[2]);
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.point = p;
      best.triangle = static_cast<int>(t);
      best.barycentric = bary;
    }
  }
  return best;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("gpmm_" + tag + "_" + std::to_string(static_cast<long long>(stamp)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
