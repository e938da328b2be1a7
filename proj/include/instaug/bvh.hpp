#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "instaug/mesh.hpp"

namespace instaug {

/// Closed-triangle intersection (edge and vertex hits count). Returns the
/// hit distance for t > 1e-9, or nothing for misses, parallel rays and
/// degenerate triangles. `direction` must be unit length for the returned
/// t to be a metric distance.
std::optional<double> intersect_ray_triangle(const Eigen::Vector3d& origin,
                                             const Eigen::Vector3d& direction,
                                             const Eigen::Vector3d& a,
                                             const Eigen::Vector3d& b,
                                             const Eigen::Vector3d& c);

/// Axis-aligned BVH over mesh triangles, built with binned surface-area
/// splits, at most 4 triangles per leaf.
class TriangleBvh {
 public:
  explicit TriangleBvh(const Mesh& mesh);

  struct Hit {
    double t = 0.0;
    int triangle = -1;
  };

  /// Nearest intersection with t in (1e-9, t_max]. Ties on t resolve to the
  /// lowest triangle index, matching a sequential scan.
  std::optional<Hit> nearest_hit(const Eigen::Vector3d& origin,
                                 const Eigen::Vector3d& direction, double t_max) const;

  std::size_t triangle_count() const { return triangle_vertices_.size() / 3; }

  /// Vertices of triangle i in original index order.
  const Eigen::Vector3d* triangle(std::size_t i) const { return &triangle_vertices_[3 * i]; }

  /// Internal node layout: leaves have count > 0 and reference a triangle
  /// range; internal nodes store the left child in `first` and the negated
  /// right child in `count`.
  struct NodeStorage {
    Eigen::Vector3d lower, upper;
    int32_t first = 0;
    int32_t count = 0;
  };

 private:
  std::vector<NodeStorage> nodes_;
  std::vector<Eigen::Vector3d> triangle_vertices_;  // 3 per triangle, reordered
  std::vector<int> triangle_ids_;                   // reordered -> original index
};

}  // namespace instaug
