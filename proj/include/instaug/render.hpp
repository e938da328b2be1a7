#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "instaug/bvh.hpp"
#include "instaug/mesh.hpp"
#include "instaug/remission.hpp"
#include "instaug/rng.hpp"
#include "instaug/sensor.hpp"
#include "instaug/types.hpp"

namespace instaug {

/// One simulated return on the instance surface, with the grid cell that
/// generated it.
struct InstancePoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  float remission = 0.0f;
  int ring = 0;
  int step = 0;
};

struct InstancePoints {
  std::vector<InstancePoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Azimuth extent of instance hits per ring; rings without hits carry no
/// interval. Intervals are unwrapped (end may exceed pi across the seam).
struct RingShadow {
  struct Interval {
    double begin = 0.0;
    double end = 0.0;
  };
  std::vector<std::optional<Interval>> per_ring;

  bool any() const;
  /// True when `ring` has a shadow that covers azimuth `phi` (mod 2*pi).
  bool covers(int ring, double phi) const;
};

/// Casts every grid ray inside the placed mesh's angular footprint and keeps
/// the nearest surface hit with distance in [range_min, range_max]. Returns
/// the hit points (remission unset) and the per-ring shadow. An instance
/// outside every ray yields an empty result.
std::pair<InstancePoints, RingShadow> ray_cast(const Mesh& placed_mesh,
                                               const SensorModel& sensor,
                                               const TriangleBvh& bvh);

struct CullResult {
  PointCloud cloud;
  SemanticLabels labels;  // empty when no labels were given
  std::size_t removed = 0;
};

/// Removes original points whose ring has a shadow and whose azimuth falls
/// inside it, regardless of range (points both in front of and behind the
/// instance). Labels, when present, are filtered in lockstep.
CullResult cull_shadowed_points(const PointCloud& cloud, const SemanticLabels* labels,
                                const RingShadow& shadow, std::span<const int> point_rings);

/// Mask variant used by the pipeline: true marks a point to remove.
std::vector<char> shadow_cull_mask(std::span<const double> azimuths,
                                   std::span<const int> point_rings, const RingShadow& shadow);

/// Draws each point's remission from the table at its Euclidean range.
void assign_remission(InstancePoints& points, const RemissionTable& table, Rng& rng);

/// Drops each point with probability drop_probability, then jitters each
/// survivor's range along its own ray with probability noise_fraction
/// (zero-mean Gaussian, std sigma). Angles never change.
void apply_dropout_and_noise(InstancePoints& points, double drop_probability,
                             double noise_fraction, double sigma, const SensorModel& sensor,
                             Rng& rng);

/// Writes the instance points as a scan .bin for visual inspection.
void dump_instance_points(const InstancePoints& points, const std::filesystem::path& path);

}  // namespace instaug
