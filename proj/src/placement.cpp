#include "instaug/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "instaug/error.hpp"

namespace instaug {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;
}  // namespace

bool AzimuthInterval::contains(double phi) const {
  const double width = end - begin;
  if (width >= kTwoPi) return true;
  double offset = std::fmod(phi - begin, kTwoPi);
  if (offset < 0.0) offset += kTwoPi;
  return offset <= width;
}

ClassHeightRanges default_height_ranges() {
  return {{"person", {1.5, 2.0}},     {"bicyclist", {1.5, 2.0}}, {"motorcyclist", {1.5, 2.0}},
          {"bicycle", {1.0, 1.4}},    {"motorcycle", {1.0, 1.4}}, {"car", {1.4, 1.8}},
          {"truck", {2.5, 4.0}},      {"bus", {2.8, 3.6}}};
}

std::pair<double, double> random_local_transform(const std::string& class_name,
                                                 const ClassHeightRanges& ranges, Rng& rng) {
  const auto it = ranges.find(class_name);
  if (it == ranges.end()) {
    throw Error("no height range configured for class: " + class_name);
  }
  const auto [min_height, max_height] = it->second;
  if (!(min_height > 0.0) || max_height < min_height) {
    throw Error("invalid height range for class: " + class_name);
  }
  const double height_scale = rng.uniform(min_height, max_height);
  const double yaw = rng.uniform(-kPi, kPi);
  return {height_scale, yaw};
}

FootprintSpan azimuth_span(const Mesh& mesh, double height_scale, double yaw, double r) {
  if (!(r > 0.0)) {
    throw Error("placement distance must be positive");
  }
  if (mesh.vertices.empty()) {
    throw Error("cannot compute the span of an empty mesh");
  }
  const double c = std::cos(yaw), s = std::sin(yaw);
  FootprintSpan span;
  span.lo = std::numeric_limits<double>::infinity();
  span.hi = -span.lo;
  span.range_inner = std::numeric_limits<double>::infinity();
  span.range_outer = 0.0;
  for (const auto& v : mesh.vertices) {
    const double sx = height_scale * v.x();
    const double sy = height_scale * v.y();
    const double x = c * sx - s * sy + r;
    const double y = s * sx + c * sy;
    if (x <= 0.0) {
      throw Error("mesh would reach the sensor at distance " + std::to_string(r));
    }
    const double phi = std::atan2(y, x);
    span.lo = std::min(span.lo, phi);
    span.hi = std::max(span.hi, phi);
    const double range = std::hypot(x, y);
    span.range_inner = std::min(span.range_inner, range);
    span.range_outer = std::max(span.range_outer, range);
  }
  return span;
}

namespace {

struct OccupancyGrid {
  std::vector<char> occupied;

  static OccupancyGrid mark(const PolarView& cloud, const FreeSpaceBands& bands,
                            const SensorModel& sensor) {
    OccupancyGrid grid;
    grid.occupied.assign(sensor.azimuth_step_count(), 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.z[i] < bands.z_low || cloud.z[i] > bands.z_high) continue;
      if (cloud.planar_range[i] < bands.range_inner || cloud.planar_range[i] > bands.range_outer)
        continue;
      grid.occupied[sensor.azimuth_cell(cloud.azimuth[i])] = 1;
    }
    return grid;
  }
};

}  // namespace

std::vector<AzimuthInterval> find_viable_regions(const PolarView& cloud, double span_width,
                                                 const FreeSpaceBands& bands,
                                                 const SensorModel& sensor) {
  if (!(span_width > 0.0)) {
    throw Error("span width must be positive");
  }
  const std::size_t cells = sensor.azimuth_step_count();
  const OccupancyGrid grid = OccupancyGrid::mark(cloud, bands, sensor);
  const double resolution = sensor.azimuth_resolution;

  std::vector<AzimuthInterval> regions;
  const auto emit = [&](std::size_t first, std::size_t count) {
    AzimuthInterval interval;
    interval.first_cell = first;
    interval.cell_count = count;
    interval.begin = -kPi + static_cast<double>(first) * resolution;
    interval.end = interval.begin + static_cast<double>(count) * resolution;
    if (interval.width() >= span_width) {
      regions.push_back(interval);
    }
  };

  std::size_t first_occupied = cells;
  for (std::size_t i = 0; i < cells; ++i) {
    if (grid.occupied[i]) {
      first_occupied = i;
      break;
    }
  }
  if (first_occupied == cells) {
    AzimuthInterval full;
    full.first_cell = 0;
    full.cell_count = cells;
    full.begin = -kPi;
    full.end = -kPi + kTwoPi;
    if (full.width() >= span_width) regions.push_back(full);
    return regions;
  }

  // Walk the circle once starting from an occupied cell so every free run,
  // including the one crossing the seam, is seen whole.
  std::size_t run_start = cells;  // sentinel: no open run
  std::size_t run_length = 0;
  for (std::size_t offset = 1; offset <= cells; ++offset) {
    const std::size_t cell = (first_occupied + offset) % cells;
    if (!grid.occupied[cell]) {
      if (run_start == cells) {
        run_start = cell;
        run_length = 0;
      }
      ++run_length;
    } else if (run_start != cells) {
      emit(run_start, run_length);
      run_start = cells;
    }
  }
  if (run_start != cells) {
    emit(run_start, run_length);
  }
  std::sort(regions.begin(), regions.end(),
            [](const AzimuthInterval& a, const AzimuthInterval& b) {
              return a.first_cell < b.first_cell;
            });
  return regions;
}

PolarCache build_polar_cache(const PointCloud& cloud, const SensorModel& sensor) {
  PolarCache cache;
  cache.azimuth.reserve(cloud.size());
  cache.planar_range.reserve(cloud.size());
  cache.z.reserve(cloud.size());
  cache.ring.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    cache.append(Eigen::Vector3d(p.x, p.y, p.z), sensor);
  }
  return cache;
}

void PolarCache::append(const Eigen::Vector3d& point, const SensorModel& sensor) {
  const PolarPoint polar = to_polar(point);
  azimuth.push_back(polar.azimuth);
  planar_range.push_back(polar.planar_range);
  z.push_back(polar.z);
  ring.push_back(assign_ring(sensor, polar.elevation));
}

void PolarCache::filter(const std::vector<char>& remove_mask) {
  std::size_t kept = 0;
  for (std::size_t i = 0; i < remove_mask.size(); ++i) {
    if (remove_mask[i]) continue;
    azimuth[kept] = azimuth[i];
    planar_range[kept] = planar_range[i];
    z[kept] = z[i];
    ring[kept] = ring[i];
    ++kept;
  }
  azimuth.resize(kept);
  planar_range.resize(kept);
  z.resize(kept);
  ring.resize(kept);
}

std::vector<AzimuthInterval> find_viable_regions(const PointCloud& cloud, double span_width,
                                                 const FreeSpaceBands& bands,
                                                 const SensorModel& sensor) {
  const PolarCache cache = build_polar_cache(cloud, sensor);
  return find_viable_regions(cache.view(), span_width, bands, sensor);
}

GroundEstimate estimate_ground(const PolarView& cloud, const AzimuthInterval& footprint,
                               double range_inner, double range_outer, double expansion_step,
                               int max_expansions) {
  if (cloud.size() == 0) {
    throw Error("cannot estimate ground from an empty cloud");
  }
  const double center_range = 0.5 * (range_inner + range_outer);
  for (int expansion = 0; expansion <= max_expansions; ++expansion) {
    const double growth = expansion_step * expansion;
    const double inner = std::max(0.0, range_inner - growth);
    const double outer = range_outer + growth;
    // The angular growth matches the radial one at the footprint's distance.
    const double angular_growth = growth / std::max(center_range, 1e-6);
    AzimuthInterval interval = footprint;
    interval.begin -= angular_growth;
    interval.end += angular_growth;

    double z_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.planar_range[i] < inner || cloud.planar_range[i] > outer) continue;
      if (!interval.contains(cloud.azimuth[i])) continue;
      z_min = std::min(z_min, cloud.z[i]);
    }
    if (z_min != std::numeric_limits<double>::infinity()) {
      return {z_min, expansion};
    }
  }
  throw PlacementError("no ground points found around the footprint after " +
                       std::to_string(max_expansions) + " expansions");
}

GroundEstimate estimate_ground(const PointCloud& cloud, const AzimuthInterval& footprint,
                               double range_inner, double range_outer, double expansion_step,
                               int max_expansions) {
  std::vector<double> azimuth, planar_range, z;
  azimuth.reserve(cloud.size());
  planar_range.reserve(cloud.size());
  z.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    const PolarPoint polar = to_polar(Eigen::Vector3d(p.x, p.y, p.z));
    azimuth.push_back(polar.azimuth);
    planar_range.push_back(polar.planar_range);
    z.push_back(polar.z);
  }
  return estimate_ground(PolarView{azimuth, planar_range, z}, footprint, range_inner,
                         range_outer, expansion_step, max_expansions);
}

double ground_anchor_z(const PolarView& cloud, double percentile) {
  if (cloud.size() == 0) {
    throw Error("cannot derive a ground anchor from an empty cloud");
  }
  std::vector<double> zs(cloud.z.begin(), cloud.z.end());
  const auto rank = static_cast<std::size_t>(
      std::clamp(percentile, 0.0, 1.0) * static_cast<double>(zs.size() - 1));
  std::nth_element(zs.begin(), zs.begin() + static_cast<std::ptrdiff_t>(rank), zs.end());
  return zs[rank];
}

AttemptOutcome attempt_placement(const Mesh& mesh, double height_scale, double yaw,
                                 const PolarView& cloud, const SensorModel& sensor,
                                 const PlacementConfig& config, double anchor_z, Rng& rng) {
  AttemptOutcome outcome;

  const double r_lo = std::max(config.distance_min, sensor.range_min);
  const double r_hi = std::min(config.distance_max, sensor.range_max);
  if (!(r_hi >= r_lo)) {
    outcome.failure = "distance range is empty after clipping to the sensor range";
    return outcome;
  }
  const double r = rng.uniform(r_lo, r_hi);

  FootprintSpan span;
  try {
    span = azimuth_span(mesh, height_scale, yaw, r);
  } catch (const Error& error) {
    outcome.failure = error.what();
    return outcome;
  }

  FreeSpaceBands bands;
  bands.range_inner = std::max(0.0, span.range_inner - config.footprint_margin);
  bands.range_outer = span.range_outer + config.footprint_margin;
  bands.z_low = anchor_z + config.ground_clearance;
  bands.z_high = anchor_z + height_scale;

  // A degenerate footprint (all vertices on one vertical line) still needs a
  // nonzero span to claim a cell.
  const double span_width = std::max(span.width(), 1e-9);
  const auto regions = find_viable_regions(cloud, span_width, bands, sensor);
  if (regions.empty()) {
    outcome.failure = "no viable free-space region at distance " + std::to_string(r);
    return outcome;
  }
  const AzimuthInterval& region =
      regions[static_cast<std::size_t>(rng.uniform_index(regions.size()))];

  // The mesh at reference azimuth a covers [a + span.lo, a + span.hi]; any a
  // in [begin - lo, end - hi] keeps that inside the region.
  const double azimuth = rng.uniform(region.begin - span.lo, region.end - span.hi);

  AzimuthInterval footprint;
  footprint.begin = azimuth + span.lo;
  footprint.end = azimuth + span.hi;

  GroundEstimate ground;
  try {
    ground = estimate_ground(cloud, footprint, bands.range_inner, bands.range_outer,
                             config.expansion_step, config.max_expansions);
  } catch (const PlacementError& error) {
    outcome.failure = error.what();
    return outcome;
  }

  LocalTransform transform;
  transform.height_scale = height_scale;
  transform.yaw = yaw;
  transform.translation =
      Eigen::Vector3d(r * std::cos(azimuth), r * std::sin(azimuth), ground.z);

  // The claim was made in a band anchored on the scan-wide ground proxy; the
  // local ground may differ, so re-check the body band that is actually
  // occupied now.
  {
    const double z_low = ground.z + config.ground_clearance;
    const double z_high = ground.z + height_scale;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.z[i] < z_low || cloud.z[i] > z_high) continue;
      if (cloud.planar_range[i] < bands.range_inner || cloud.planar_range[i] > bands.range_outer)
        continue;
      if (!footprint.contains(cloud.azimuth[i])) continue;
      outcome.failure = "anchored pose collides with scan points";
      return outcome;
    }
  }

  outcome.placed = transform_mesh(mesh, height_scale, yaw, transform.translation);

  // Recompute the span over the final vertices so the reported bounds hold
  // exactly, not just up to the analytic shift.
  double span_min = std::numeric_limits<double>::infinity(), span_max = -span_min;
  for (const auto& v : outcome.placed.vertices) {
    const double phi = azimuth + wrap_angle(std::atan2(v.y(), v.x()) - azimuth);
    span_min = std::min(span_min, phi);
    span_max = std::max(span_max, phi);
  }

  outcome.ok = true;
  outcome.result.transform = transform;
  outcome.result.distance = r;
  outcome.result.azimuth = azimuth;
  outcome.result.span_min = span_min;
  outcome.result.span_max = span_max;
  outcome.result.ground_z = ground.z;
  outcome.result.ground_expansions = ground.expansions;
  outcome.result.bands = bands;
  outcome.result.region = region;
  return outcome;
}

std::pair<Mesh, PlacementResult> place_mesh(const Mesh& mesh, const std::string& class_name,
                                            const PointCloud& cloud, const SensorModel& sensor,
                                            const PlacementConfig& config, Rng& rng) {
  const PolarCache cache = build_polar_cache(cloud, sensor);
  const PolarView view = cache.view();
  const auto [height_scale, yaw] = random_local_transform(class_name, config.height_ranges, rng);
  const double anchor_z = ground_anchor_z(view, config.ground_percentile);

  std::string last_failure = "no attempts made";
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    AttemptOutcome outcome =
        attempt_placement(mesh, height_scale, yaw, view, sensor, config, anchor_z, rng);
    if (outcome.ok) {
      outcome.result.attempts = attempt;
      return {std::move(outcome.placed), outcome.result};
    }
    last_failure = outcome.failure;
  }
  throw PlacementError("placement failed after " + std::to_string(config.max_attempts) +
                       " attempts (" + last_failure + ")");
}

}  // namespace instaug
