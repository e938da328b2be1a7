#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace instaug {

/// Signed coordinate axis of the authoring tool's frame.
enum class Axis { pos_x, neg_x, pos_y, neg_y, pos_z, neg_z };

Axis parse_axis(const std::string& name);
std::string axis_name(Axis axis);

/// Triangle mesh. After normalize_mesh the frame is canonical: x forward,
/// z up, base at z = 0, height exactly 1, x/y bounds centered on the origin.
struct Mesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Axis-aligned box of a normalized mesh: dims are the extents along
/// (x, y, z), center is the midpoint of the bounds.
struct CanonicalBox {
  Eigen::Vector3d dims = Eigen::Vector3d::Zero();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
};

/// Loads an ASCII OBJ or an ASCII/binary little-endian PLY file. Faces with
/// more than three vertices are fan-triangulated.
Mesh load_mesh(const std::filesystem::path& path);

/// Remaps the mesh into the canonical frame (given which source axes point
/// up and forward), scales it uniformly to height 1 and recenters it so the
/// base sits at z = 0 with the x/y bounds midpoint at the origin. The result
/// is a bitwise fixed point: normalizing it again changes nothing.
Mesh normalize_mesh(const Mesh& mesh, Axis up = Axis::pos_z, Axis forward = Axis::pos_x);

CanonicalBox derive_canonical_box(const Mesh& mesh);

/// Scale about the origin, then rotate by yaw about +z, then translate.
Mesh transform_mesh(const Mesh& mesh, double scale, double yaw,
                    const Eigen::Vector3d& translation);

}  // namespace instaug
