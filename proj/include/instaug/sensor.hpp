#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace instaug {

/// Scan pattern of a spinning LiDAR: one elevation per ring and a fixed
/// azimuth grid anchored at -pi. All angles are radians.
struct SensorModel {
  std::vector<double> ring_elevations;  // strictly increasing
  double azimuth_resolution = 0.0;      // radians per step
  double range_min = 0.0;
  double range_max = 0.0;

  std::size_t ring_count() const { return ring_elevations.size(); }
  std::size_t azimuth_step_count() const;

  /// Azimuth of grid step k: -pi + k * azimuth_resolution.
  double azimuth_of_step(std::size_t step) const;

  /// Grid cell containing azimuth phi (phi in any representation; it is
  /// wrapped into [-pi, pi) first).
  std::size_t azimuth_cell(double phi) const;

  /// Throws if the invariants do not hold.
  void validate() const;
};

/// Polar view of a Cartesian point. planar_range is the horizontal distance
/// sqrt(x^2 + y^2); azimuth lies in [-pi, pi); elevation is measured from
/// the horizontal plane; z is passed through.
struct PolarPoint {
  double planar_range = 0.0;
  double azimuth = 0.0;
  double elevation = 0.0;
  double z = 0.0;
};

PolarPoint to_polar(const Eigen::Vector3d& point);
Eigen::Vector3d from_polar(const PolarPoint& polar);

/// Wraps an angle into [-pi, pi).
double wrap_angle(double angle);

/// Unit direction of the grid ray (ring, step). Throws on out-of-range
/// indices.
Eigen::Vector3d ray_direction(const SensorModel& sensor, std::size_t ring, std::size_t step);

struct RayId {
  int ring = 0;
  int step = 0;
};

/// All grid cells whose (elevation, azimuth) fall in the closed window.
/// The azimuth window is given unwrapped (phi_min <= phi_max) and may cross
/// the -pi/pi seam. Cells are returned ordered by ring, then step.
std::vector<RayId> rays_in_window(const SensorModel& sensor, double phi_min, double phi_max,
                                  double theta_min, double theta_max);

/// Synthetic presets: "hdl64" (64 rings, -24.8 deg to +2 deg, 0.08 deg
/// azimuth) and "vlp32" (32 rings, -30 deg to +10 deg, 0.2 deg azimuth).
SensorModel preset_sensor(const std::string& name);

/// Nearest ring for a point elevation, or -1 when the elevation is farther
/// from every ring than half the local inter-ring gap (such points belong to
/// no scanline and are never culled).
int assign_ring(const SensorModel& sensor, double elevation);

}  // namespace instaug
