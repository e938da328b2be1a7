#include "instaug/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "instaug/annotate.hpp"
#include "instaug/bvh.hpp"
#include "instaug/error.hpp"
#include "instaug/scan_io.hpp"

namespace instaug {

namespace {
using nlohmann::json;
}

Dependencies load_dependencies(const AugmentationConfig& config) {
  Dependencies deps;
  deps.sensor = config.resolve_sensor();
  if (config.instances_per_scan > 0) {
    if (config.manifest_path.empty()) {
      throw Error("config needs a manifest path when instances_per_scan > 0");
    }
    if (config.remission_table_path.empty()) {
      throw Error("config needs a remission table path when instances_per_scan > 0");
    }
    deps.manifest = load_manifest(config.manifest_path);
    deps.table = RemissionTable::load(config.remission_table_path);
  }
  return deps;
}

int AggregateReport::total_placed() const {
  int total = 0;
  for (const ScanReport& scan : scans) total += scan.instances_placed;
  return total;
}

int AggregateReport::total_failed() const {
  int total = 0;
  for (const ScanReport& scan : scans) total += scan.instances_failed;
  return total;
}

AugmentResult augment_scan(const PointCloud& cloud, const ScanAnnotations& annotations,
                           const AugmentationConfig& config, const Dependencies& deps,
                           Rng& rng) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  if (annotations.mode == AnnotationMode::segmentation &&
      annotations.labels.size() != cloud.size()) {
    throw Error("label count (" + std::to_string(annotations.labels.size()) +
                ") does not match the point count (" + std::to_string(cloud.size()) + ")");
  }

  AugmentResult result;
  result.cloud = cloud;
  result.annotations = annotations;
  ScanReport& report = result.report;

  if (config.instances_per_scan == 0) {
    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    return result;
  }

  const SensorModel& sensor = deps.sensor;
  PolarCache polar = build_polar_cache(result.cloud, sensor);

  const std::vector<const MeshRecord*> records = sample_meshes(
      deps.manifest, config.class_names(), static_cast<std::size_t>(config.instances_per_scan),
      rng, config.top_k);

  uint32_t instance_id = annotations.mode == AnnotationMode::segmentation
                             ? next_instance_id(annotations.labels)
                             : 1;
  const double anchor_z = cloud.empty()
                              ? 0.0
                              : ground_anchor_z(polar.view(), config.placement.ground_percentile);

  for (const MeshRecord* record : records) {
    InstanceReport instance_report;
    instance_report.class_name = record->class_name;

    const std::shared_ptr<const Mesh> mesh = deps.mesh_cache.get(deps.manifest, *record);
    const auto [height_scale, yaw] =
        random_local_transform(record->class_name, config.placement.height_ranges, rng);

    // Placement and rendering share the attempt budget: a pose whose
    // rendering yields no hits is retried with a fresh distance.
    bool placed = false;
    AttemptOutcome outcome;
    InstancePoints instance_points;
    RingShadow shadow;
    std::string last_failure = "cloud is empty";
    for (int attempt = 1; attempt <= config.placement.max_attempts && !cloud.empty(); ++attempt) {
      outcome = attempt_placement(*mesh, height_scale, yaw, polar.view(), sensor,
                                  config.placement, anchor_z, rng);
      if (!outcome.ok) {
        last_failure = outcome.failure;
        continue;
      }
      const TriangleBvh bvh(outcome.placed);
      auto cast = ray_cast(outcome.placed, sensor, bvh);
      if (cast.first.empty()) {
        last_failure = "no rays hit the placed mesh";
        continue;
      }
      instance_points = std::move(cast.first);
      shadow = std::move(cast.second);
      outcome.result.attempts = attempt;
      placed = true;
      break;
    }

    if (!placed) {
      instance_report.failure_reason = last_failure;
      report.instances.push_back(std::move(instance_report));
      ++report.instances_failed;
      continue;
    }

    assign_remission(instance_points, deps.table, rng);

    // Shadow culling applies to everything currently in the cloud, original
    // points and earlier instances alike.
    const std::vector<char> remove = shadow_cull_mask(polar.azimuth, polar.ring, shadow);
    std::size_t removed = 0;
    {
      std::size_t kept = 0;
      auto& points = result.cloud.points;
      auto* labels = annotations.mode == AnnotationMode::segmentation
                         ? &result.annotations.labels.labels
                         : nullptr;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (remove[i]) {
          ++removed;
          continue;
        }
        points[kept] = points[i];
        if (labels) (*labels)[kept] = (*labels)[i];
        ++kept;
      }
      points.resize(kept);
      if (labels) labels->resize(kept);
      polar.filter(remove);
    }

    apply_dropout_and_noise(instance_points, config.drop_probability, config.noise_fraction,
                            config.noise_sigma, sensor, rng);

    for (const InstancePoint& point : instance_points.points) {
      result.cloud.points.push_back(Point{static_cast<float>(point.position.x()),
                                          static_cast<float>(point.position.y()),
                                          static_cast<float>(point.position.z()),
                                          point.remission});
      // The polar cache tracks the stored float32 coordinates so later
      // instances see exactly the cloud that will be written out.
      const Point& stored = result.cloud.points.back();
      polar.append(Eigen::Vector3d(stored.x, stored.y, stored.z), sensor);
    }

    if (annotations.mode == AnnotationMode::segmentation) {
      const auto fragment =
          segmentation_labels(instance_points.size(),
                              static_cast<uint16_t>(record->class_id), instance_id++);
      append_labels(result.annotations.labels, fragment, result.cloud.size());
    } else {
      result.annotations.boxes.push_back(
          transform_box(record->box, outcome.result.transform, record->class_id));
    }

    instance_report.placed = true;
    instance_report.points_added = instance_points.size();
    instance_report.points_culled = removed;
    instance_report.placement = outcome.result;
    instance_report.shadow = shadow;
    report.points_added += instance_points.size();
    report.points_culled += removed;
    ++report.instances_placed;
    report.instances.push_back(std::move(instance_report));
  }

  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

namespace {

std::filesystem::path annotation_path_for(const std::filesystem::path& scan_file,
                                          AnnotationMode mode) {
  std::filesystem::path path = scan_file;
  path.replace_extension(mode == AnnotationMode::segmentation ? ".label" : ".txt");
  return path;
}

ScanAnnotations read_annotations(const std::filesystem::path& scan_file, AnnotationMode mode) {
  ScanAnnotations annotations;
  annotations.mode = mode;
  const std::filesystem::path path = annotation_path_for(scan_file, mode);
  if (mode == AnnotationMode::segmentation) {
    annotations.labels = read_labels(path);
  } else if (std::filesystem::exists(path)) {
    annotations.boxes = read_boxes(path);  // a detection scan may start with no boxes
  }
  return annotations;
}

void write_outputs(const AugmentResult& result, const std::filesystem::path& scan_file,
                   const std::filesystem::path& out_dir) {
  write_point_cloud(result.cloud, out_dir / scan_file.filename());
  const std::filesystem::path annotation_name =
      annotation_path_for(scan_file.filename(), result.annotations.mode);
  if (result.annotations.mode == AnnotationMode::segmentation) {
    write_labels(result.annotations.labels, out_dir / annotation_name);
  } else {
    write_boxes(result.annotations.boxes, out_dir / annotation_name);
  }
}

}  // namespace

ScanReport augment_scan_file(const std::filesystem::path& scan_file,
                             const std::filesystem::path& out_dir,
                             const AugmentationConfig& config, const Dependencies& deps) {
  const PointCloud cloud = read_point_cloud(scan_file);
  const ScanAnnotations annotations = read_annotations(scan_file, config.mode);
  Rng rng(stable_hash64(config.seed, scan_file.filename().string()));
  AugmentResult result = augment_scan(cloud, annotations, config, deps, rng);
  result.report.scan_name = scan_file.filename().string();
  std::filesystem::create_directories(out_dir);
  write_outputs(result, scan_file, out_dir);
  return std::move(result.report);
}

int resolve_worker_count(const AugmentationConfig& config) {
  if (config.workers > 0) return config.workers;
  if (const char* env = std::getenv("INSTAUG_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hardware = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hardware, 1u, 8u));
}

AggregateReport augment_dataset(const std::filesystem::path& scan_dir,
                                const std::filesystem::path& out_dir,
                                const AugmentationConfig& config) {
  config.validate();
  if (!std::filesystem::is_directory(scan_dir)) {
    throw Error("scan directory does not exist: " + scan_dir.string());
  }
  std::vector<std::filesystem::path> scan_files;
  for (const auto& entry : std::filesystem::directory_iterator(scan_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      scan_files.push_back(entry.path());
    }
  }
  std::sort(scan_files.begin(), scan_files.end());

  const Dependencies deps = load_dependencies(config);
  std::filesystem::create_directories(out_dir);

  AggregateReport aggregate;
  aggregate.scans.resize(scan_files.size());
  std::vector<std::string> errors(scan_files.size());

  const int workers =
      std::max(1, std::min<int>(resolve_worker_count(config),
                                static_cast<int>(std::max<std::size_t>(scan_files.size(), 1))));
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= scan_files.size()) return;
      try {
        aggregate.scans[index] = augment_scan_file(scan_files[index], out_dir, config, deps);
      } catch (const std::exception& e) {
        aggregate.scans[index].scan_name = scan_files[index].filename().string();
        errors[index] = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& thread : pool) thread.join();
  }

  for (std::size_t i = 0; i < scan_files.size(); ++i) {
    if (!errors[i].empty()) {
      ++aggregate.scans_failed;
      aggregate.scan_errors.push_back(scan_files[i].filename().string() + ": " + errors[i]);
    }
  }
  write_report(aggregate, out_dir / "report.json");
  return aggregate;
}

void write_report(const AggregateReport& report, const std::filesystem::path& path) {
  json j;
  j["scans_failed"] = report.scans_failed;
  j["scan_errors"] = report.scan_errors;
  j["instances_placed"] = report.total_placed();
  j["instances_failed"] = report.total_failed();
  json scans = json::array();
  for (const ScanReport& scan : report.scans) {
    json s;
    s["scan"] = scan.scan_name;
    s["placed"] = scan.instances_placed;
    s["failed"] = scan.instances_failed;
    s["points_culled"] = scan.points_culled;
    s["points_added"] = scan.points_added;
    s["wall_ms"] = scan.wall_ms;
    json instances = json::array();
    for (const InstanceReport& instance : scan.instances) {
      json entry;
      entry["class"] = instance.class_name;
      entry["placed"] = instance.placed;
      if (!instance.placed) {
        entry["reason"] = instance.failure_reason;
      } else {
        entry["points_added"] = instance.points_added;
        entry["points_culled"] = instance.points_culled;
        if (instance.placement) {
          entry["distance"] = instance.placement->distance;
          entry["azimuth"] = instance.placement->azimuth;
          entry["ground_z"] = instance.placement->ground_z;
          entry["attempts"] = instance.placement->attempts;
        }
      }
      instances.push_back(std::move(entry));
    }
    s["instances"] = std::move(instances);
    scans.push_back(std::move(s));
  }
  j["scans"] = std::move(scans);

  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot write report: " + path.string());
  }
  out << j.dump(2) << "\n";
}

}  // namespace instaug
