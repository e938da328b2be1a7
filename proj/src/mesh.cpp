#include "instaug/mesh.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <limits>

#include "instaug/error.hpp"

namespace instaug {

Axis parse_axis(const std::string& name) {
  if (name == "x" || name == "+x") return Axis::pos_x;
  if (name == "-x") return Axis::neg_x;
  if (name == "y" || name == "+y") return Axis::pos_y;
  if (name == "-y") return Axis::neg_y;
  if (name == "z" || name == "+z") return Axis::pos_z;
  if (name == "-z") return Axis::neg_z;
  throw Error("unknown axis name: " + name);
}

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::pos_x: return "+x";
    case Axis::neg_x: return "-x";
    case Axis::pos_y: return "+y";
    case Axis::neg_y: return "-y";
    case Axis::pos_z: return "+z";
    case Axis::neg_z: return "-z";
  }
  return "?";
}

namespace {

int axis_index(Axis axis) {
  switch (axis) {
    case Axis::pos_x:
    case Axis::neg_x: return 0;
    case Axis::pos_y:
    case Axis::neg_y: return 1;
    default: return 2;
  }
}

double axis_sign(Axis axis) {
  return (axis == Axis::neg_x || axis == Axis::neg_y || axis == Axis::neg_z) ? -1.0 : 1.0;
}

struct Bounds {
  Eigen::Vector3d lo, hi;
};

Bounds bounds_of(const std::vector<Eigen::Vector3d>& vertices) {
  Bounds b;
  b.lo.setConstant(std::numeric_limits<double>::infinity());
  b.hi.setConstant(-std::numeric_limits<double>::infinity());
  for (const auto& v : vertices) {
    b.lo = b.lo.cwiseMin(v);
    b.hi = b.hi.cwiseMax(v);
  }
  return b;
}

}  // namespace

Mesh normalize_mesh(const Mesh& mesh, Axis up, Axis forward) {
  if (axis_index(up) == axis_index(forward)) {
    throw Error("up and forward axes must differ (got " + axis_name(up) + " / " +
                axis_name(forward) + ")");
  }
  if (mesh.vertices.empty() || mesh.triangles.empty()) {
    throw Error("cannot normalize an empty mesh");
  }

  Mesh out;
  out.triangles = mesh.triangles;
  out.vertices.resize(mesh.vertices.size());

  // Axis remap is a pure component shuffle with sign flips, so it is exact.
  const int iz = axis_index(up), ix = axis_index(forward);
  const double sz = axis_sign(up), sx = axis_sign(forward);
  // y completes the right-handed frame: y = z cross x in source coordinates.
  Eigen::Vector3d zv = Eigen::Vector3d::Zero(), xv = Eigen::Vector3d::Zero();
  zv[iz] = sz;
  xv[ix] = sx;
  const Eigen::Vector3d yv = zv.cross(xv);
  const int iy = (yv[0] != 0.0) ? 0 : (yv[1] != 0.0 ? 1 : 2);
  const double sy = yv[iy];

  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Eigen::Vector3d& v = mesh.vertices[i];
    out.vertices[i] = Eigen::Vector3d(sx * v[ix], sy * v[iy], sz * v[iz]);
  }

  Bounds b = bounds_of(out.vertices);
  const double height = b.hi.z() - b.lo.z();
  if (!(height > 1e-12)) {
    throw Error("degenerate mesh: zero vertical extent after axis remap");
  }

  // Dividing by the extent (rather than multiplying by its reciprocal) makes
  // the top land on exactly 1.0 and the base on exactly +0.0.
  const Eigen::Vector3d ref(0.5 * (b.lo.x() + b.hi.x()), 0.5 * (b.lo.y() + b.hi.y()), b.lo.z());
  for (auto& v : out.vertices) {
    v = (v - ref) / height;
  }

  // Recentering can be off by an ulp after the scale. Iterate until the
  // bounds midpoint is exactly zero so normalization is a bitwise fixed
  // point; this converges in one or two passes.
  for (int pass = 0; pass < 64; ++pass) {
    b = bounds_of(out.vertices);
    const Eigen::Vector3d drift(0.5 * (b.lo.x() + b.hi.x()), 0.5 * (b.lo.y() + b.hi.y()),
                                b.lo.z());
    if (drift.x() == 0.0 && drift.y() == 0.0 && drift.z() == 0.0) break;
    for (auto& v : out.vertices) {
      v -= drift;
    }
  }
  return out;
}

CanonicalBox derive_canonical_box(const Mesh& mesh) {
  if (mesh.vertices.empty()) {
    throw Error("cannot derive a box from an empty mesh");
  }
  const Bounds b = bounds_of(mesh.vertices);
  CanonicalBox box;
  box.dims = b.hi - b.lo;
  box.center = 0.5 * (b.lo + b.hi);
  return box;
}

Mesh transform_mesh(const Mesh& mesh, double scale, double yaw,
                    const Eigen::Vector3d& translation) {
  Mesh out;
  out.triangles = mesh.triangles;
  out.vertices.resize(mesh.vertices.size());
  const double c = std::cos(yaw), s = std::sin(yaw);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Eigen::Vector3d v = mesh.vertices[i] * scale;
    out.vertices[i] = Eigen::Vector3d(c * v.x() - s * v.y() + translation.x(),
                                      s * v.x() + c * v.y() + translation.y(),
                                      v.z() + translation.z());
  }
  return out;
}

}  // namespace instaug
