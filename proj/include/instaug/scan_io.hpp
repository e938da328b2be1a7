#pragma once

#include <filesystem>
#include <vector>

#include "instaug/types.hpp"

namespace instaug {

/// Reads a scan stored as consecutive little-endian (x, y, z, remission)
/// float32 records. Points with non-finite coordinates are dropped and
/// counted; remission is clamped to [0, 1].
PointCloud read_point_cloud(const std::filesystem::path& path);

/// Inverse of read_point_cloud: 16 bytes per point, no header.
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);

/// Reads per-point labels stored as little-endian 32-bit words
/// (low 16 bits semantic id, high 16 bits instance id).
SemanticLabels read_labels(const std::filesystem::path& path);

void write_labels(const SemanticLabels& labels, const std::filesystem::path& path);

/// Line-oriented box annotations: `class_id cx cy cz length width height yaw`
/// per line. Yaw is normalized into (-pi, pi] on read.
std::vector<BoxAnnotation> read_boxes(const std::filesystem::path& path);

/// Emits boxes with 6 significant digits per float field.
void write_boxes(const std::vector<BoxAnnotation>& boxes, const std::filesystem::path& path);

/// Wraps an angle into (-pi, pi].
double normalize_yaw(double yaw);

}  // namespace instaug
