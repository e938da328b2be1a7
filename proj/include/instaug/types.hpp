#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace instaug {

/// One LiDAR return in the sensor frame (right-handed, x forward, z up,
/// origin at the sensor). Matches the 16-byte on-disk record exactly.
struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float remission = 0.0f;
};
static_assert(sizeof(Point) == 16, "Point must match the 16-byte scan record");

struct PointCloud {
  std::vector<Point> points;
  /// Non-finite returns dropped while reading the scan file.
  std::size_t dropped_invalid = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Per-point annotation: low 16 bits semantic class, high 16 bits instance.
struct PointLabel {
  uint16_t semantic_id = 0;
  uint16_t instance_id = 0;

  bool operator==(const PointLabel&) const = default;
};

struct SemanticLabels {
  std::vector<PointLabel> labels;

  std::size_t size() const { return labels.size(); }
};

/// 7-DOF box in the sensor frame. Yaw is counterclockwise about +z, zero
/// along +x, normalized into (-pi, pi].
struct BoxAnnotation {
  int class_id = 0;
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double length = 0.0, width = 0.0, height = 0.0;
  double yaw = 0.0;
};

}  // namespace instaug
