#include "instaug/sensor.hpp"

#include <algorithm>
#include <cmath>

#include "instaug/error.hpp"

namespace instaug {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;
}  // namespace

double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, kTwoPi);
  if (wrapped >= kPi) wrapped -= kTwoPi;
  if (wrapped < -kPi) wrapped += kTwoPi;
  return wrapped;
}

std::size_t SensorModel::azimuth_step_count() const {
  return static_cast<std::size_t>(std::ceil(kTwoPi / azimuth_resolution - 1e-9));
}

double SensorModel::azimuth_of_step(std::size_t step) const {
  return -kPi + static_cast<double>(step) * azimuth_resolution;
}

std::size_t SensorModel::azimuth_cell(double phi) const {
  const double wrapped = wrap_angle(phi);
  const auto cell = static_cast<std::ptrdiff_t>(std::floor((wrapped + kPi) / azimuth_resolution));
  const auto count = static_cast<std::ptrdiff_t>(azimuth_step_count());
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(cell, 0, count - 1));
}

void SensorModel::validate() const {
  if (ring_elevations.empty()) {
    throw Error("sensor model needs at least one ring");
  }
  for (std::size_t i = 1; i < ring_elevations.size(); ++i) {
    if (!(ring_elevations[i] > ring_elevations[i - 1])) {
      throw Error("ring elevations must be strictly increasing");
    }
  }
  if (!(azimuth_resolution > 0.0)) {
    throw Error("azimuth resolution must be positive");
  }
  if (!(range_min > 0.0) || !(range_max > range_min)) {
    throw Error("sensor range limits must satisfy 0 < range_min < range_max");
  }
}

PolarPoint to_polar(const Eigen::Vector3d& point) {
  PolarPoint polar;
  polar.planar_range = std::hypot(point.x(), point.y());
  double phi = std::atan2(point.y(), point.x());
  if (phi >= kPi) phi = -kPi;  // atan2 returns (-pi, pi]; the grid wants [-pi, pi)
  polar.azimuth = phi;
  polar.elevation = std::atan2(point.z(), polar.planar_range);
  polar.z = point.z();
  return polar;
}

Eigen::Vector3d from_polar(const PolarPoint& polar) {
  return {polar.planar_range * std::cos(polar.azimuth),
          polar.planar_range * std::sin(polar.azimuth), polar.z};
}

Eigen::Vector3d ray_direction(const SensorModel& sensor, std::size_t ring, std::size_t step) {
  if (ring >= sensor.ring_count()) {
    throw Error("ring index out of range: " + std::to_string(ring));
  }
  if (step >= sensor.azimuth_step_count()) {
    throw Error("azimuth step out of range: " + std::to_string(step));
  }
  const double theta = sensor.ring_elevations[ring];
  const double phi = sensor.azimuth_of_step(step);
  const double ct = std::cos(theta);
  return {ct * std::cos(phi), ct * std::sin(phi), std::sin(theta)};
}

std::vector<RayId> rays_in_window(const SensorModel& sensor, double phi_min, double phi_max,
                                  double theta_min, double theta_max) {
  std::vector<RayId> rays;
  if (phi_max < phi_min || theta_max < theta_min) {
    return rays;
  }
  const std::size_t steps = sensor.azimuth_step_count();
  const double width = phi_max - phi_min;
  const bool full_circle = width >= kTwoPi;

  // Shift the window start into [-pi, pi) (remainder is exact, so the
  // boundaries move by whole turns without rounding) and test each step
  // azimuth directly and one turn up.
  const double base = wrap_angle(phi_min);
  std::vector<int> selected_steps;
  selected_steps.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double phi = sensor.azimuth_of_step(k);
    const bool inside = full_circle || (phi >= base && phi <= base + width) ||
                        (phi + kTwoPi >= base && phi + kTwoPi <= base + width);
    if (inside) selected_steps.push_back(static_cast<int>(k));
  }

  for (std::size_t ring = 0; ring < sensor.ring_count(); ++ring) {
    const double theta = sensor.ring_elevations[ring];
    if (theta < theta_min || theta > theta_max) continue;
    for (int step : selected_steps) {
      rays.push_back(RayId{static_cast<int>(ring), step});
    }
  }
  return rays;
}

SensorModel preset_sensor(const std::string& name) {
  const auto deg = [](double d) { return d * kPi / 180.0; };
  SensorModel sensor;
  if (name == "hdl64") {
    const std::size_t rings = 64;
    for (std::size_t i = 0; i < rings; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(rings - 1);
      sensor.ring_elevations.push_back(deg(-24.8 + t * (2.0 - -24.8)));
    }
    sensor.azimuth_resolution = deg(0.08);
    sensor.range_min = 1.0;
    sensor.range_max = 120.0;
  } else if (name == "vlp32") {
    const std::size_t rings = 32;
    for (std::size_t i = 0; i < rings; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(rings - 1);
      sensor.ring_elevations.push_back(deg(-30.0 + t * (10.0 - -30.0)));
    }
    sensor.azimuth_resolution = deg(0.2);
    sensor.range_min = 1.0;
    sensor.range_max = 100.0;
  } else {
    throw Error("unknown sensor preset: " + name);
  }
  sensor.validate();
  return sensor;
}

int assign_ring(const SensorModel& sensor, double elevation) {
  const auto& elevations = sensor.ring_elevations;
  const auto upper = std::lower_bound(elevations.begin(), elevations.end(), elevation);
  std::size_t nearest;
  if (upper == elevations.begin()) {
    nearest = 0;
  } else if (upper == elevations.end()) {
    nearest = elevations.size() - 1;
  } else {
    const std::size_t hi = static_cast<std::size_t>(upper - elevations.begin());
    nearest = (elevation - elevations[hi - 1] <= elevations[hi] - elevation) ? hi - 1 : hi;
  }

  // Tolerance: half the gap toward the neighbor on the point's side (the
  // single adjacent gap at the edge rings). Points farther than that belong
  // to no scanline of this sensor.
  double gap;
  if (elevations.size() == 1) {
    gap = 2.0 * sensor.azimuth_resolution;  // arbitrary small window
  } else if (elevation >= elevations[nearest]) {
    gap = (nearest + 1 < elevations.size()) ? elevations[nearest + 1] - elevations[nearest]
                                            : elevations[nearest] - elevations[nearest - 1];
  } else {
    gap = (nearest > 0) ? elevations[nearest] - elevations[nearest - 1]
                        : elevations[nearest + 1] - elevations[nearest];
  }
  if (std::abs(elevation - elevations[nearest]) > 0.5 * gap) {
    return -1;
  }
  return static_cast<int>(nearest);
}

}  // namespace instaug
