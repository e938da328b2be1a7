#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "instaug/config.hpp"
#include "instaug/mesh_db.hpp"
#include "instaug/placement.hpp"
#include "instaug/remission.hpp"
#include "instaug/render.hpp"
#include "instaug/rng.hpp"
#include "instaug/sensor.hpp"
#include "instaug/types.hpp"

namespace instaug {

/// Immutable state shared by every scan of a run.
struct Dependencies {
  MeshManifest manifest;
  RemissionTable table{1.0, 1};
  SensorModel sensor;
  mutable MeshCache mesh_cache;
};

Dependencies load_dependencies(const AugmentationConfig& config);

/// Labels or boxes paired with a scan, depending on the annotation mode.
struct ScanAnnotations {
  AnnotationMode mode = AnnotationMode::segmentation;
  SemanticLabels labels;
  std::vector<BoxAnnotation> boxes;
};

struct InstanceReport {
  std::string class_name;
  bool placed = false;
  std::string failure_reason;
  std::size_t points_added = 0;
  std::size_t points_culled = 0;
  std::optional<PlacementResult> placement;
  RingShadow shadow;
};

struct ScanReport {
  std::string scan_name;
  int instances_placed = 0;
  int instances_failed = 0;
  std::size_t points_culled = 0;
  std::size_t points_added = 0;
  double wall_ms = 0.0;
  std::vector<InstanceReport> instances;
};

struct AugmentResult {
  PointCloud cloud;
  ScanAnnotations annotations;
  ScanReport report;
};

/// Runs the full augmentation loop on one scan: sample class/mesh pairs,
/// then per instance place, ray cast, cull the shadow, assign remission,
/// apply dropout and noise, append the points and update the annotations.
/// Later instances see the cloud already augmented by earlier ones. Failed
/// placements are reported, never retried past the attempt budget.
AugmentResult augment_scan(const PointCloud& cloud, const ScanAnnotations& annotations,
                           const AugmentationConfig& config, const Dependencies& deps,
                           Rng& rng);

struct AggregateReport {
  std::vector<ScanReport> scans;
  int scans_failed = 0;  // scans that could not be processed at all
  std::vector<std::string> scan_errors;

  int total_placed() const;
  int total_failed() const;
};

/// Augments every .bin under scan_dir (with its .label or box .txt partner,
/// per mode) into out_dir, in parallel over scans. Each scan's generator is
/// seeded from (config.seed, file name), so results do not depend on worker
/// count or directory order. A report is written to out_dir/report.json.
AggregateReport augment_dataset(const std::filesystem::path& scan_dir,
                                const std::filesystem::path& out_dir,
                                const AugmentationConfig& config);

/// Single-scan variant of augment_dataset (same seeding and output naming).
ScanReport augment_scan_file(const std::filesystem::path& scan_file,
                             const std::filesystem::path& out_dir,
                             const AugmentationConfig& config, const Dependencies& deps);

void write_report(const AggregateReport& report, const std::filesystem::path& path);

/// Worker count resolution: explicit config value, else the INSTAUG_WORKERS
/// environment variable, else hardware concurrency capped at 8.
int resolve_worker_count(const AugmentationConfig& config);

}  // namespace instaug
