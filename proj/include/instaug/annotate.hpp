#pragma once

#include <cstdint>
#include <vector>

#include "instaug/mesh.hpp"
#include "instaug/placement.hpp"
#include "instaug/types.hpp"

namespace instaug {

/// Labels for one inserted instance: every point gets (class_id, instance_id).
std::vector<PointLabel> segmentation_labels(std::size_t point_count, uint16_t class_id,
                                            uint32_t instance_id);

/// Smallest instance id above everything already present in the base labels.
uint32_t next_instance_id(const SemanticLabels& base);

/// Maps the canonical box through a placement pose: dims scale uniformly by
/// height_scale, the center is scaled, yawed about +z and translated, and the
/// box yaw equals the pose yaw (normalized into (-pi, pi]).
BoxAnnotation transform_box(const CanonicalBox& canonical, const LocalTransform& transform,
                            int class_id);

/// Appends an instance's label fragment, checking the lockstep contract
/// against the expected cloud size.
void append_labels(SemanticLabels& base, const std::vector<PointLabel>& fragment,
                   std::size_t expected_total);

}  // namespace instaug
