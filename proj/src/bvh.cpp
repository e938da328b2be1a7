#include "instaug/bvh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>

#include "instaug/error.hpp"

namespace instaug {

std::optional<double> intersect_ray_triangle(const Eigen::Vector3d& origin,
                                             const Eigen::Vector3d& direction,
                                             const Eigen::Vector3d& a,
                                             const Eigen::Vector3d& b,
                                             const Eigen::Vector3d& c) {
  constexpr double kParallelEps = 1e-14;
  constexpr double kMinT = 1e-9;
  const Eigen::Vector3d edge1 = b - a;
  const Eigen::Vector3d edge2 = c - a;
  const Eigen::Vector3d pvec = direction.cross(edge2);
  const double det = edge1.dot(pvec);
  if (std::abs(det) < kParallelEps) {
    return std::nullopt;  // parallel to the plane, or zero-area triangle
  }
  const double inv_det = 1.0 / det;
  const Eigen::Vector3d tvec = origin - a;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Eigen::Vector3d qvec = tvec.cross(edge1);
  const double v = direction.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = edge2.dot(qvec) * inv_det;
  if (t <= kMinT) return std::nullopt;
  return t;
}

namespace {

struct TriangleInfo {
  Eigen::Vector3d lower, upper, centroid;
};

double half_area(const Eigen::Vector3d& lower, const Eigen::Vector3d& upper) {
  const Eigen::Vector3d d = (upper - lower).cwiseMax(0.0);
  return d.x() * d.y() + d.y() * d.z() + d.z() * d.x();
}

// Slab test against [0, t_limit]; writes the entry distance for child
// ordering. Zero direction components are handled explicitly to avoid
// 0 * inf.
inline bool hits_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                     const Eigen::Vector3d& inv_dir, const Eigen::Vector3d& lower,
                     const Eigen::Vector3d& upper, double t_limit, double& entry) {
  double t0 = 0.0, t1 = t_limit;
  for (int axis = 0; axis < 3; ++axis) {
    if (direction[axis] == 0.0) {
      if (origin[axis] < lower[axis] || origin[axis] > upper[axis]) return false;
      continue;
    }
    double near = (lower[axis] - origin[axis]) * inv_dir[axis];
    double far = (upper[axis] - origin[axis]) * inv_dir[axis];
    if (near > far) std::swap(near, far);
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  entry = t0;
  return true;
}

}  // namespace

struct BvhBuilder {
  const std::vector<TriangleInfo>& info;
  std::vector<int>& order;
  std::vector<TriangleBvh::NodeStorage>& nodes;

  int32_t build(int begin, int end, int depth);
};

int32_t BvhBuilder::build(int begin, int end, int depth) {
  constexpr int kLeafSize = 4;
  constexpr int kBins = 16;
  constexpr int kMedianDepth = 48;  // force balanced splits past this depth

  const auto node_index = static_cast<int32_t>(nodes.size());
  nodes.emplace_back();

  Eigen::Vector3d lower = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d upper = -lower;
  Eigen::Vector3d centroid_lower = lower, centroid_upper = upper;
  for (int i = begin; i < end; ++i) {
    const TriangleInfo& t = info[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    lower = lower.cwiseMin(t.lower);
    upper = upper.cwiseMax(t.upper);
    centroid_lower = centroid_lower.cwiseMin(t.centroid);
    centroid_upper = centroid_upper.cwiseMax(t.centroid);
  }
  nodes[static_cast<std::size_t>(node_index)].lower = lower;
  nodes[static_cast<std::size_t>(node_index)].upper = upper;

  const int count = end - begin;
  int axis = 0;
  (centroid_upper - centroid_lower).maxCoeff(&axis);
  const double extent = centroid_upper[axis] - centroid_lower[axis];

  if (count <= kLeafSize || extent <= 0.0) {
    nodes[static_cast<std::size_t>(node_index)].first = begin;
    nodes[static_cast<std::size_t>(node_index)].count = count;
    return node_index;
  }

  const auto median_split = [&]() {
    const int middle = begin + count / 2;
    std::nth_element(order.begin() + begin, order.begin() + middle, order.begin() + end,
                     [&](int a, int b) {
                       return info[static_cast<std::size_t>(a)].centroid[axis] <
                              info[static_cast<std::size_t>(b)].centroid[axis];
                     });
    return middle;
  };

  int middle;
  if (depth >= kMedianDepth) {
    middle = median_split();
  } else {
    // Binned SAH split along the widest centroid axis.
    struct BinStats {
      Eigen::Vector3d lower = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
      Eigen::Vector3d upper = Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity());
      int count = 0;
    };
    BinStats bins[kBins];
    const auto bin_of = [&](const TriangleInfo& t) {
      const double fraction = (t.centroid[axis] - centroid_lower[axis]) / extent;
      return std::clamp(static_cast<int>(fraction * kBins), 0, kBins - 1);
    };
    for (int i = begin; i < end; ++i) {
      const TriangleInfo& t = info[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      BinStats& bin = bins[bin_of(t)];
      bin.lower = bin.lower.cwiseMin(t.lower);
      bin.upper = bin.upper.cwiseMax(t.upper);
      bin.count += 1;
    }

    double best_cost = std::numeric_limits<double>::infinity();
    int best_split = -1;
    for (int split = 1; split < kBins; ++split) {
      BinStats left, right;
      for (int i = 0; i < split; ++i) {
        if (bins[i].count == 0) continue;
        left.lower = left.lower.cwiseMin(bins[i].lower);
        left.upper = left.upper.cwiseMax(bins[i].upper);
        left.count += bins[i].count;
      }
      for (int i = split; i < kBins; ++i) {
        if (bins[i].count == 0) continue;
        right.lower = right.lower.cwiseMin(bins[i].lower);
        right.upper = right.upper.cwiseMax(bins[i].upper);
        right.count += bins[i].count;
      }
      if (left.count == 0 || right.count == 0) continue;
      const double cost = left.count * half_area(left.lower, left.upper) +
                          right.count * half_area(right.lower, right.upper);
      if (cost < best_cost) {
        best_cost = cost;
        best_split = split;
      }
    }

    if (best_split < 0) {
      middle = median_split();
    } else {
      const auto it = std::partition(order.begin() + begin, order.begin() + end, [&](int i) {
        return bin_of(info[static_cast<std::size_t>(i)]) < best_split;
      });
      middle = static_cast<int>(it - order.begin());
      if (middle == begin || middle == end) {
        middle = median_split();
      }
    }
  }

  const int32_t left_child = build(begin, middle, depth + 1);
  const int32_t right_child = build(middle, end, depth + 1);
  // Internal nodes store the left child in `first` and the negated right
  // child in `count` (child indices are always >= 1, so count < 0 marks an
  // internal node).
  nodes[static_cast<std::size_t>(node_index)].first = left_child;
  nodes[static_cast<std::size_t>(node_index)].count = -right_child;
  return node_index;
}

TriangleBvh::TriangleBvh(const Mesh& mesh) {
  if (mesh.triangles.empty()) {
    throw Error("cannot build a BVH over an empty mesh");
  }
  const int n = static_cast<int>(mesh.triangles.size());
  std::vector<TriangleInfo> info(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(i)];
    const Eigen::Vector3d& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Eigen::Vector3d& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Eigen::Vector3d& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
    TriangleInfo& t = info[static_cast<std::size_t>(i)];
    t.lower = a.cwiseMin(b).cwiseMin(c);
    t.upper = a.cwiseMax(b).cwiseMax(c);
    t.centroid = (t.lower + t.upper) * 0.5;
    order[static_cast<std::size_t>(i)] = i;
  }
  nodes_.reserve(static_cast<std::size_t>(2 * n));
  BvhBuilder builder{info, order, nodes_};
  builder.build(0, n, 0);

  // Lay triangles out in leaf order for cache-friendly traversal.
  triangle_ids_ = std::move(order);
  triangle_vertices_.resize(static_cast<std::size_t>(3 * n));
  for (int i = 0; i < n; ++i) {
    const auto& tri =
        mesh.triangles[static_cast<std::size_t>(triangle_ids_[static_cast<std::size_t>(i)])];
    for (int k = 0; k < 3; ++k) {
      triangle_vertices_[static_cast<std::size_t>(3 * i + k)] =
          mesh.vertices[static_cast<std::size_t>(tri[k])];
    }
  }
}

std::optional<TriangleBvh::Hit> TriangleBvh::nearest_hit(const Eigen::Vector3d& origin,
                                                         const Eigen::Vector3d& direction,
                                                         double t_max) const {
  const Eigen::Vector3d inv_dir(1.0 / direction.x(), 1.0 / direction.y(), 1.0 / direction.z());
  double best_t = t_max;
  int best_reordered = -1;

  int32_t stack[128];
  int depth = 0;
  stack[depth++] = 0;
  while (depth > 0) {
    const NodeStorage& node = nodes_[static_cast<std::size_t>(stack[--depth])];
    double entry;
    if (!hits_box(origin, direction, inv_dir, node.lower, node.upper, best_t, entry)) continue;
    if (node.count > 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const Eigen::Vector3d* v = triangle(static_cast<std::size_t>(i));
        const auto t = intersect_ray_triangle(origin, direction, v[0], v[1], v[2]);
        if (!t || *t > best_t) continue;
        // Ties on t keep the lowest original triangle index, matching what a
        // sequential scan over all triangles would return.
        const int original = triangle_ids_[static_cast<std::size_t>(i)];
        if (*t < best_t || best_reordered < 0 ||
            original < triangle_ids_[static_cast<std::size_t>(best_reordered)]) {
          best_t = *t;
          best_reordered = i;
        }
      }
    } else {
      const int32_t left = node.first;
      const int32_t right = -node.count;
      const NodeStorage& ln = nodes_[static_cast<std::size_t>(left)];
      const NodeStorage& rn = nodes_[static_cast<std::size_t>(right)];
      double le = std::numeric_limits<double>::infinity();
      double re = std::numeric_limits<double>::infinity();
      const bool lh = hits_box(origin, direction, inv_dir, ln.lower, ln.upper, best_t, le);
      const bool rh = hits_box(origin, direction, inv_dir, rn.lower, rn.upper, best_t, re);
      // Push the farther child first so the nearer one is visited next.
      if (lh && rh) {
        if (le <= re) {
          stack[depth++] = right;
          stack[depth++] = left;
        } else {
          stack[depth++] = left;
          stack[depth++] = right;
        }
      } else if (lh) {
        stack[depth++] = left;
      } else if (rh) {
        stack[depth++] = right;
      }
    }
  }
  if (best_reordered < 0) return std::nullopt;
  return Hit{best_t, triangle_ids_[static_cast<std::size_t>(best_reordered)]};
}

}  // namespace instaug
