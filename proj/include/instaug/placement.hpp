#pragma once

#include <Eigen/Core>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "instaug/mesh.hpp"
#include "instaug/rng.hpp"
#include "instaug/sensor.hpp"
#include "instaug/types.hpp"

namespace instaug {

/// Pose applied to a canonical mesh: uniform scale (canonical height 1, so
/// the scale equals the physical height in meters), yaw about +z, then
/// translation.
struct LocalTransform {
  double height_scale = 1.0;
  double yaw = 0.0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// Unwrapped azimuth interval [begin, end] (end may exceed pi when the
/// interval crosses the seam), plus its grid-cell extent.
struct AzimuthInterval {
  double begin = 0.0;
  double end = 0.0;
  std::size_t first_cell = 0;
  std::size_t cell_count = 0;

  double width() const { return end - begin; }
  bool contains(double phi) const;
};

/// Relative azimuth extent [lo, hi] of a posed mesh around its reference
/// azimuth, plus its planar range extent from the sensor.
struct FootprintSpan {
  double lo = 0.0;
  double hi = 0.0;
  double range_inner = 0.0;
  double range_outer = 0.0;

  double width() const { return hi - lo; }
};

/// Bands a free-space query filtered points with.
struct FreeSpaceBands {
  double z_low = 0.0;
  double z_high = 0.0;
  double range_inner = 0.0;
  double range_outer = 0.0;
};

struct GroundEstimate {
  double z = 0.0;
  int expansions = 0;
};

struct PlacementResult {
  LocalTransform transform;
  double distance = 0.0;           // drawn placement distance r
  double azimuth = 0.0;            // reference azimuth the mesh center sits on
  double span_min = 0.0;           // azimuth extent of the placed vertices
  double span_max = 0.0;
  double ground_z = 0.0;           // estimated ground the base was anchored to
  int ground_expansions = 0;
  FreeSpaceBands bands;            // bands the free-space claim was made under
  AzimuthInterval region;          // the claimed free region
  int attempts = 0;                // distance draws consumed (1-based)
};

/// Per-class physical height ranges in meters.
using ClassHeightRanges = std::map<std::string, std::pair<double, double>>;

ClassHeightRanges default_height_ranges();

/// Placement knobs; defaults follow the engine's standard configuration.
struct PlacementConfig {
  double distance_min = 3.0;
  double distance_max = 40.0;
  double footprint_margin = 0.2;   // radial slack around the mesh footprint
  double ground_clearance = 0.3;   // free-space band starts this far above ground
  double ground_percentile = 0.05; // cloud z percentile used as the ground proxy
  double expansion_step = 0.5;     // meters per ground-search expansion
  int max_expansions = 5;
  int max_attempts = 10;
  ClassHeightRanges height_ranges = default_height_ranges();
};

/// Draws (height_scale, yaw): the scale uniform in the class's height range,
/// the yaw uniform in [-pi, pi).
std::pair<double, double> random_local_transform(const std::string& class_name,
                                                 const ClassHeightRanges& ranges, Rng& rng);

/// Azimuth and planar-range extent of the mesh scaled by height_scale,
/// rotated by yaw and provisionally centered at distance r along azimuth 0.
/// Throws when the mesh would reach the sensor (r not larger than the mesh's
/// radial half-extent).
FootprintSpan azimuth_span(const Mesh& mesh, double height_scale, double yaw, double r);

/// Lightweight polar view of a cloud used by the free-space queries.
struct PolarView {
  std::span<const double> azimuth;
  std::span<const double> planar_range;
  std::span<const double> z;

  std::size_t size() const { return azimuth.size(); }
};

/// Maximal azimuth runs of width >= span_width, at the sensor's azimuth
/// resolution, that contain no point inside the z/range bands. An empty
/// cloud yields one full-circle region.
std::vector<AzimuthInterval> find_viable_regions(const PolarView& cloud, double span_width,
                                                 const FreeSpaceBands& bands,
                                                 const SensorModel& sensor);

std::vector<AzimuthInterval> find_viable_regions(const PointCloud& cloud, double span_width,
                                                 const FreeSpaceBands& bands,
                                                 const SensorModel& sensor);

/// Minimum z over all cloud points inside the footprint column. When the
/// column is empty the radial band (and proportionally the azimuth interval)
/// grows by expansion_step per round, up to max_expansions. Throws when no
/// points are ever found.
GroundEstimate estimate_ground(const PolarView& cloud, const AzimuthInterval& footprint,
                               double range_inner, double range_outer, double expansion_step,
                               int max_expansions);

GroundEstimate estimate_ground(const PointCloud& cloud, const AzimuthInterval& footprint,
                               double range_inner, double range_outer, double expansion_step,
                               int max_expansions);

/// One full placement attempt at a drawn distance; used by place_mesh and by
/// the pipeline (which interleaves rendering with the attempt loop).
struct AttemptOutcome {
  bool ok = false;
  std::string failure;
  Mesh placed;
  PlacementResult result;
};

AttemptOutcome attempt_placement(const Mesh& mesh, double height_scale, double yaw,
                                 const PolarView& cloud, const SensorModel& sensor,
                                 const PlacementConfig& config, double ground_anchor_z,
                                 Rng& rng);

/// Robust low-percentile of the cloud's z values; the free-space height band
/// is anchored on it.
double ground_anchor_z(const PolarView& cloud, double percentile);

/// Full placement loop: draws scale and yaw once, then retries distances up
/// to config.max_attempts until a collision-free, ground-anchored pose is
/// found. Throws PlacementError when the attempts are exhausted.
std::pair<Mesh, PlacementResult> place_mesh(const Mesh& mesh, const std::string& class_name,
                                            const PointCloud& cloud, const SensorModel& sensor,
                                            const PlacementConfig& config, Rng& rng);

/// Builds the polar arrays backing a PolarView.
struct PolarCache {
  std::vector<double> azimuth;
  std::vector<double> planar_range;
  std::vector<double> z;
  std::vector<int> ring;

  PolarView view() const { return {azimuth, planar_range, z}; }
  void append(const Eigen::Vector3d& point, const SensorModel& sensor);
  void filter(const std::vector<char>& remove_mask);
};

PolarCache build_polar_cache(const PointCloud& cloud, const SensorModel& sensor);

}  // namespace instaug
