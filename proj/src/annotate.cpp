#include "instaug/annotate.hpp"

#include <cmath>

#include "instaug/error.hpp"
#include "instaug/scan_io.hpp"

namespace instaug {

std::vector<PointLabel> segmentation_labels(std::size_t point_count, uint16_t class_id,
                                            uint32_t instance_id) {
  if (instance_id > 0xffffu) {
    throw Error("instance id overflow: " + std::to_string(instance_id));
  }
  return std::vector<PointLabel>(point_count,
                                 PointLabel{class_id, static_cast<uint16_t>(instance_id)});
}

uint32_t next_instance_id(const SemanticLabels& base) {
  uint32_t max_id = 0;
  for (const PointLabel& label : base.labels) {
    max_id = std::max<uint32_t>(max_id, label.instance_id);
  }
  return max_id + 1;
}

BoxAnnotation transform_box(const CanonicalBox& canonical, const LocalTransform& transform,
                            int class_id) {
  const double s = transform.height_scale;
  const double c = std::cos(transform.yaw), sn = std::sin(transform.yaw);
  const Eigen::Vector3d scaled = canonical.center * s;
  BoxAnnotation box;
  box.class_id = class_id;
  box.cx = c * scaled.x() - sn * scaled.y() + transform.translation.x();
  box.cy = sn * scaled.x() + c * scaled.y() + transform.translation.y();
  box.cz = scaled.z() + transform.translation.z();
  box.length = canonical.dims.x() * s;
  box.width = canonical.dims.y() * s;
  box.height = canonical.dims.z() * s;
  box.yaw = normalize_yaw(transform.yaw);
  return box;
}

void append_labels(SemanticLabels& base, const std::vector<PointLabel>& fragment,
                   std::size_t expected_total) {
  base.labels.insert(base.labels.end(), fragment.begin(), fragment.end());
  if (base.labels.size() != expected_total) {
    throw Error("label stream out of step with the point cloud: " +
                std::to_string(base.labels.size()) + " labels for " +
                std::to_string(expected_total) + " points");
  }
}

}  // namespace instaug
