#include "instaug/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "instaug/error.hpp"
#include "instaug/scan_io.hpp"

namespace instaug {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}  // namespace

bool RingShadow::any() const {
  for (const auto& interval : per_ring) {
    if (interval) return true;
  }
  return false;
}

bool RingShadow::covers(int ring, double phi) const {
  // Closed interval with an angular hair of slack so a hit whose azimuth is
  // recomputed from its position still counts as inside at the edges.
  constexpr double kEdgeEps = 1e-12;
  if (ring < 0 || static_cast<std::size_t>(ring) >= per_ring.size()) return false;
  const auto& interval = per_ring[static_cast<std::size_t>(ring)];
  if (!interval) return false;
  const double width = interval->end - interval->begin;
  double offset = std::fmod(phi - interval->begin, kTwoPi);
  if (offset < 0.0) offset += kTwoPi;
  return offset <= width + kEdgeEps || offset >= kTwoPi - kEdgeEps;
}

std::pair<InstancePoints, RingShadow> ray_cast(const Mesh& placed_mesh,
                                               const SensorModel& sensor,
                                               const TriangleBvh& bvh) {
  if (placed_mesh.vertices.empty()) {
    throw Error("cannot render an empty mesh");
  }

  // Angular footprint of the vertices, unwrapped around the mesh center so a
  // seam crossing stays a single interval.
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& v : placed_mesh.vertices) centroid += v;
  centroid /= static_cast<double>(placed_mesh.vertices.size());
  const double center_azimuth = std::atan2(centroid.y(), centroid.x());

  double phi_lo = std::numeric_limits<double>::infinity(), phi_hi = -phi_lo;
  double theta_lo = phi_lo, theta_hi = -phi_lo;
  for (const auto& v : placed_mesh.vertices) {
    const PolarPoint polar = to_polar(v);
    const double phi = center_azimuth + wrap_angle(polar.azimuth - center_azimuth);
    phi_lo = std::min(phi_lo, phi);
    phi_hi = std::max(phi_hi, phi);
    theta_lo = std::min(theta_lo, polar.elevation);
    theta_hi = std::max(theta_hi, polar.elevation);
  }

  // Elevation extrema of a surface point can fall slightly outside the
  // vertex extrema (chords pass nearer the sensor than their endpoints), so
  // pad the window; rays added this way either hit or cost nothing.
  double ring_gap = 0.0;
  for (std::size_t i = 1; i < sensor.ring_count(); ++i) {
    ring_gap = std::max(ring_gap, sensor.ring_elevations[i] - sensor.ring_elevations[i - 1]);
  }
  const double theta_pad = 2.0 * ring_gap + 1e-6;
  const double phi_pad = 2.0 * sensor.azimuth_resolution;

  InstancePoints instance;
  RingShadow shadow;
  shadow.per_ring.assign(sensor.ring_count(), std::nullopt);

  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  const std::vector<RayId> rays = rays_in_window(sensor, phi_lo - phi_pad, phi_hi + phi_pad,
                                                 theta_lo - theta_pad, theta_hi + theta_pad);
  for (const RayId& ray : rays) {
    const Eigen::Vector3d direction =
        ray_direction(sensor, static_cast<std::size_t>(ray.ring), static_cast<std::size_t>(ray.step));
    const auto hit = bvh.nearest_hit(origin, direction, sensor.range_max);
    if (!hit || hit->t < sensor.range_min) continue;

    InstancePoint point;
    point.position = direction * hit->t;
    point.ring = ray.ring;
    point.step = ray.step;
    instance.points.push_back(point);

    const double phi =
        center_azimuth + wrap_angle(sensor.azimuth_of_step(static_cast<std::size_t>(ray.step)) -
                                    center_azimuth);
    auto& interval = shadow.per_ring[static_cast<std::size_t>(ray.ring)];
    if (!interval) {
      interval = RingShadow::Interval{phi, phi};
    } else {
      interval->begin = std::min(interval->begin, phi);
      interval->end = std::max(interval->end, phi);
    }
  }
  return {std::move(instance), std::move(shadow)};
}

std::vector<char> shadow_cull_mask(std::span<const double> azimuths,
                                   std::span<const int> point_rings, const RingShadow& shadow) {
  std::vector<char> remove(azimuths.size(), 0);
  if (!shadow.any()) return remove;
  for (std::size_t i = 0; i < azimuths.size(); ++i) {
    remove[i] = shadow.covers(point_rings[i], azimuths[i]) ? 1 : 0;
  }
  return remove;
}

CullResult cull_shadowed_points(const PointCloud& cloud, const SemanticLabels* labels,
                                const RingShadow& shadow, std::span<const int> point_rings) {
  if (point_rings.size() != cloud.size()) {
    throw Error("ring assignment does not match the point count");
  }
  if (labels && labels->size() != cloud.size()) {
    throw Error("labels do not match the point count");
  }
  CullResult result;
  result.cloud.points.reserve(cloud.size());
  if (labels) result.labels.labels.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    const double phi = std::atan2(static_cast<double>(p.y), static_cast<double>(p.x));
    if (shadow.covers(point_rings[i], phi)) {
      ++result.removed;
      continue;
    }
    result.cloud.points.push_back(p);
    if (labels) result.labels.labels.push_back(labels->labels[i]);
  }
  return result;
}

void assign_remission(InstancePoints& points, const RemissionTable& table, Rng& rng) {
  for (InstancePoint& point : points.points) {
    point.remission = table.sample(point.position.norm(), rng);
  }
}

void apply_dropout_and_noise(InstancePoints& points, double drop_probability,
                             double noise_fraction, double sigma, const SensorModel& sensor,
                             Rng& rng) {
  if (drop_probability < 0.0 || drop_probability > 1.0 || noise_fraction < 0.0 ||
      noise_fraction > 1.0 || sigma < 0.0) {
    throw Error("dropout/noise parameters out of range");
  }
  std::vector<InstancePoint> kept;
  kept.reserve(points.size());
  for (const InstancePoint& point : points.points) {
    if (drop_probability > 0.0 && rng.uniform() < drop_probability) continue;
    kept.push_back(point);
  }
  for (InstancePoint& point : kept) {
    if (noise_fraction <= 0.0 || rng.uniform() >= noise_fraction) continue;
    const Eigen::Vector3d direction = ray_direction(
        sensor, static_cast<std::size_t>(point.ring), static_cast<std::size_t>(point.step));
    point.position += direction * rng.normal(sigma);
  }
  points.points = std::move(kept);
}

void dump_instance_points(const InstancePoints& points, const std::filesystem::path& path) {
  PointCloud cloud;
  cloud.points.reserve(points.size());
  for (const InstancePoint& point : points.points) {
    cloud.points.push_back(Point{static_cast<float>(point.position.x()),
                                 static_cast<float>(point.position.y()),
                                 static_cast<float>(point.position.z()), point.remission});
  }
  write_point_cloud(cloud, path);
}

}  // namespace instaug
