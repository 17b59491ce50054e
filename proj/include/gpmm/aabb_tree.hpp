#pragma once

#include <Eigen/Geometry>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "gpmm/mesh.hpp"

namespace gpmm {

// Bounding-volume tree over the triangles of a mesh. The mesh must outlive
// the tree; queries never mutate it and are safe to call concurrently.
class AabbTree {
 public:
  explicit AabbTree(const TriangleMesh& mesh);

  // Globally closest surface point. Ties between triangles at equal distance
  // go to the lowest triangle index, independent of traversal order.
  SurfacePoint closest_point(const Vec3& query) const;

  const TriangleMesh& mesh() const { return *mesh_; }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;   // child node index, -1 for leaf
    int right = -1;
    int begin = 0;   // leaf range into order_
    int end = 0;
  };

  int build(int begin, int end);
  bool edge_on_boundary(int a, int b) const;
  bool classify_boundary(const SurfacePoint& sp) const;

  const TriangleMesh* mesh_;
  std::vector<Node> nodes_;
  std::vector<int> order_;      // triangle indices, permuted during build
  std::vector<Vec3> centroids_;
  std::unordered_set<std::uint64_t> boundary_edges_;
  std::vector<bool> boundary_vertex_;
};

// Bundles a mesh with its search tree; heap-only so the internal pointer
// stays valid. Shared between kernels, models, and registration.
class ReferenceSurface {
 public:
  const TriangleMesh& mesh() const { return mesh_; }
  const AabbTree& tree() const { return tree_; }
  SurfacePoint locate(const Vec3& point) const { return tree_.closest_point(point); }

  ReferenceSurface(const ReferenceSurface&) = delete;
  ReferenceSurface& operator=(const ReferenceSurface&) = delete;

 private:
  friend std::shared_ptr<const ReferenceSurface> make_reference(TriangleMesh);
  explicit ReferenceSurface(TriangleMesh mesh)
      : mesh_(std::move(mesh)), tree_(mesh_) {}

  TriangleMesh mesh_;
  AabbTree tree_;
};

using ReferencePtr = std::shared_ptr<const ReferenceSurface>;

// Validates the mesh and wraps it with a search tree.
ReferencePtr make_reference(TriangleMesh mesh);

}  // namespace gpmm
