#include "gpmm/aabb_tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "gpmm/error.hpp"

namespace gpmm {

namespace {

constexpr int kLeafSize = 4;
constexpr double kBaryEps = 1e-9;

std::uint64_t pack_edge(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

AabbTree::AabbTree(const TriangleMesh& mesh) : mesh_(&mesh) {
  const int t = static_cast<int>(mesh.triangle_count());
  if (mesh.vertex_count() == 0 || t == 0) throw Error("cannot index an empty mesh");

  order_.resize(static_cast<std::size_t>(t));
  std::iota(order_.begin(), order_.end(), 0);
  centroids_.resize(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    const Eigen::Vector3i tri = mesh.triangles.col(i);
    centroids_[static_cast<std::size_t>(i)] =
        (mesh.vertices.col(tri[0]) + mesh.vertices.col(tri[1]) +
         mesh.vertices.col(tri[2])) / 3.0;
  }
  nodes_.reserve(static_cast<std::size_t>(2 * t));
  build(0, t);
  centroids_.clear();
  centroids_.shrink_to_fit();

  // Edge usage for boundary classification of query results.
  std::unordered_map<std::uint64_t, int> counts;
  for (int i = 0; i < t; ++i) {
    const Eigen::Vector3i tri = mesh.triangles.col(i);
    for (int k = 0; k < 3; ++k) ++counts[pack_edge(tri[k], tri[(k + 1) % 3])];
  }
  boundary_vertex_.assign(static_cast<std::size_t>(mesh.vertex_count()), false);
  for (const auto& [edge, count] : counts) {
    if (count == 1) {
      boundary_edges_.insert(edge);
      boundary_vertex_[edge >> 32] = true;
      boundary_vertex_[edge & 0xffffffffu] = true;
    }
  }
}

int AabbTree::build(int begin, int end) {
  Node node;
  for (int i = begin; i < end; ++i) {
    const Eigen::Vector3i tri = mesh_->triangles.col(order_[static_cast<std::size_t>(i)]);
    for (int k = 0; k < 3; ++k) node.box.extend(mesh_->vertices.col(tri[k]));
  }
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(node);

  if (end - begin <= kLeafSize) {
    nodes_[static_cast<std::size_t>(index)].begin = begin;
    nodes_[static_cast<std::size_t>(index)].end = end;
    return index;
  }

  Eigen::AlignedBox3d cbox;
  for (int i = begin; i < end; ++i)
    cbox.extend(centroids_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])]);
  int axis = 0;
  cbox.diagonal().maxCoeff(&axis);

  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double ca = centroids_[static_cast<std::size_t>(a)][axis];
                     const double cb = centroids_[static_cast<std::size_t>(b)][axis];
                     return ca < cb || (ca == cb && a < b);
                   });

  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(index)].left = left;
  nodes_[static_cast<std::size_t>(index)].right = right;
  return index;
}

bool AabbTree::edge_on_boundary(int a, int b) const {
  return boundary_edges_.count(pack_edge(a, b)) > 0;
}

// A result is a boundary hit when the closest point is supported by a
// boundary edge: barycentric weights ~0 identify the edge or vertex.
bool AabbTree::classify_boundary(const SurfacePoint& sp) const {
  const Eigen::Vector3i tri = mesh_->triangles.col(sp.triangle);
  int zero_mask = 0;
  int zeros = 0;
  for (int k = 0; k < 3; ++k) {
    if (sp.barycentric[k] <= kBaryEps) {
      zero_mask |= 1 << k;
      ++zeros;
    }
  }
  if (zeros == 0) return false;
  if (zeros >= 2) {
    int support = 0;
    for (int k = 0; k < 3; ++k) {
      if (!(zero_mask & (1 << k))) support = k;
    }
    return boundary_vertex_[static_cast<std::size_t>(tri[support])];
  }
  // One weight vanishes: the supporting edge is opposite that corner.
  int opposite = 0;
  for (int k = 0; k < 3; ++k) {
    if (zero_mask & (1 << k)) opposite = k;
  }
  return edge_on_boundary(tri[(opposite + 1) % 3], tri[(opposite + 2) % 3]);
}

SurfacePoint AabbTree::closest_point(const Vec3& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_tri = std::numeric_limits<int>::max();
  Vec3 best_bary = Vec3::Zero();
  Vec3 best_point = Vec3::Zero();

  std::vector<int> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.box.squaredExteriorDistance(query) > best_d2) continue;

    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int t = order_[static_cast<std::size_t>(i)];
        const Eigen::Vector3i tri = mesh_->triangles.col(t);
        const Vec3 bary = closest_point_triangle_barycentric(
            query, mesh_->vertices.col(tri[0]), mesh_->vertices.col(tri[1]),
            mesh_->vertices.col(tri[2]));
        const Vec3 point = bary[0] * mesh_->vertices.col(tri[0]) +
                           bary[1] * mesh_->vertices.col(tri[1]) +
                           bary[2] * mesh_->vertices.col(tri[2]);
        const double d2 = (point - query).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && t < best_tri)) {
          best_d2 = d2;
          best_tri = t;
          best_bary = bary;
          best_point = point;
        }
      }
      continue;
    }

    // Visit the nearer child first.
    const double dl = nodes_[static_cast<std::size_t>(node.left)].box.squaredExteriorDistance(query);
    const double dr = nodes_[static_cast<std::size_t>(node.right)].box.squaredExteriorDistance(query);
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }

  SurfacePoint sp;
  sp.point = best_point;
  sp.triangle = best_tri;
  sp.barycentric = best_bary;
  sp.on_boundary = classify_boundary(sp);
  return sp;
}

ReferencePtr make_reference(TriangleMesh mesh) {
  validate_mesh(mesh);
  return std::shared_ptr<const ReferenceSurface>(new ReferenceSurface(std::move(mesh)));
}

}  // namespace gpmm
