#include <doctest.h>

#include <cstring>
#include <fstream>
#include <set>

#include "instaug/error.hpp"
#include "instaug/pipeline.hpp"
#include "instaug/scan_io.hpp"
#include "test_support.hpp"

using namespace instaug;
using testsupport::TempDir;

namespace {

/// Fixture bundle: mesh tree + manifest + remission table + scans on disk,
/// and a config wired to them.
struct PipelineFixture {
  TempDir dir{"pipeline"};
  AugmentationConfig config;

  explicit PipelineFixture(int scans = 2, std::size_t points_per_scan = 16000) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "meshes/car");
    fs::create_directories(dir / "meshes/person");
    fs::create_directories(dir / "scans");
    testsupport::write_obj(testsupport::make_box_mesh(4.0, 2.0, 1.5),
                           dir.path() / "meshes/car/a.obj");
    testsupport::write_obj(testsupport::make_box_mesh(3.8, 1.9, 1.4),
                           dir.path() / "meshes/car/b.obj");
    testsupport::write_obj(testsupport::make_box_mesh(0.6, 0.5, 1.8),
                           dir.path() / "meshes/person/a.obj");

    const MeshManifest manifest =
        build_manifest(dir / "meshes", default_class_specs(), std::nullopt);
    save_manifest(manifest, dir / "manifest.json");

    Rng scan_gen(77);
    std::vector<fs::path> scan_files;
    for (int s = 0; s < scans; ++s) {
      PointCloud cloud = testsupport::make_ground_cloud(-1.73f, 2.0, 35.0, 700, 20);
      while (cloud.size() < points_per_scan) {
        testsupport::append_column(cloud, scan_gen.uniform(-M_PI, M_PI),
                                   scan_gen.uniform(5.0, 30.0), -1.7, 1.5, 8);
      }
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.bin", s);
      write_point_cloud(cloud, dir.path() / "scans" / name);
      SemanticLabels labels;
      labels.labels.assign(cloud.size(), PointLabel{40, 0});
      std::filesystem::path label_path = dir.path() / "scans" / name;
      label_path.replace_extension(".label");
      write_labels(labels, label_path);
      scan_files.push_back(dir.path() / "scans" / name);
    }

    Rng table_rng(78);
    build_remission_table(scan_files, 1.0, 256, table_rng).save(dir / "table.rmt");

    config.classes = {{"car", 10}, {"person", 30}};
    config.instances_per_scan = 3;
    config.manifest_path = dir / "manifest.json";
    config.remission_table_path = dir / "table.rmt";
    config.sensor_preset = "vlp32";
    config.placement.distance_min = 5.0;
    config.placement.distance_max = 25.0;
    config.seed = 42;
  }

  static constexpr std::size_t ySize = 16000;
};

bool same_bytes(const PointCloud& a, const PointCloud& b) {
  return a.size() == b.size() &&
         std::memcmp(a.points.data(), b.points.data(), a.size() * sizeof(Point)) == 0;
}

}  // namespace

TEST_CASE("defaults encode the standard parameters") {
  const AugmentationConfig config;
  CHECK(config.instances_per_scan == 5);
  CHECK(config.drop_probability == 0.1);
  CHECK(config.noise_fraction == 0.6);
  CHECK(config.classes.size() == 8);
  std::set<std::string> names;
  for (const auto& spec : config.classes) names.insert(spec.name);
  CHECK(names == std::set<std::string>{"car", "person", "bicycle", "bicyclist", "motorcycle",
                                       "motorcyclist", "truck", "bus"});
  CHECK_FALSE(config.top_k.has_value());
}

TEST_CASE("config files round trip through JSON") {
  TempDir dir("config");
  AugmentationConfig config;
  config.instances_per_scan = 2;
  config.drop_probability = 0.25;
  config.top_k = 100;
  config.mode = AnnotationMode::detection;
  config.placement.distance_max = 33.0;
  save_config(config, dir / "config.json");
  const AugmentationConfig loaded = load_config(dir / "config.json");
  CHECK(loaded.instances_per_scan == 2);
  CHECK(loaded.drop_probability == 0.25);
  REQUIRE(loaded.top_k.has_value());
  CHECK(*loaded.top_k == 100);
  CHECK(loaded.mode == AnnotationMode::detection);
  CHECK(loaded.placement.distance_max == 33.0);

  std::ofstream bad(dir / "bad.json");
  bad << "{ not json";
  bad.close();
  CHECK_THROWS_AS(load_config(dir / "bad.json"), Error);
}

TEST_CASE("augmenting with zero instances is the identity") {
  PipelineFixture fixture;
  fixture.config.instances_per_scan = 0;
  const Dependencies deps = load_dependencies(fixture.config);
  const PointCloud cloud = read_point_cloud(fixture.dir.path() / "scans/000000.bin");
  ScanAnnotations annotations;
  annotations.mode = AnnotationMode::segmentation;
  annotations.labels = read_labels(fixture.dir.path() / "scans/000000.label");

  Rng rng(1);
  const AugmentResult result = augment_scan(cloud, annotations, fixture.config, deps, rng);
  CHECK(same_bytes(result.cloud, cloud));
  CHECK(result.annotations.labels.labels == annotations.labels.labels);
  CHECK(result.report.instances_placed == 0);
  CHECK(result.report.instances_failed == 0);
}

TEST_CASE("augment_scan keeps counts, alignment and class assignments consistent") {
  PipelineFixture fixture;
  const Dependencies deps = load_dependencies(fixture.config);
  const PointCloud cloud = read_point_cloud(fixture.dir.path() / "scans/000000.bin");
  ScanAnnotations annotations;
  annotations.mode = AnnotationMode::segmentation;
  annotations.labels = read_labels(fixture.dir.path() / "scans/000000.label");

  Rng rng(5);
  const AugmentResult result = augment_scan(cloud, annotations, fixture.config, deps, rng);

  // placed + failed = n, and the report arithmetic matches the cloud.
  CHECK(result.report.instances_placed + result.report.instances_failed ==
        fixture.config.instances_per_scan);
  CHECK(result.cloud.size() ==
        cloud.size() - result.report.points_culled + result.report.points_added);
  CHECK(result.annotations.labels.size() == result.cloud.size());

  // Inserted labels carry the sampled class and fresh instance ids.
  std::set<uint16_t> inserted_classes;
  std::set<uint16_t> inserted_ids;
  for (std::size_t i = cloud.size() - result.report.points_culled;
       i < result.annotations.labels.size(); ++i) {
    inserted_classes.insert(result.annotations.labels.labels[i].semantic_id);
    inserted_ids.insert(result.annotations.labels.labels[i].instance_id);
  }
  for (uint16_t class_id : inserted_classes) {
    CHECK((class_id == 10 || class_id == 30));
  }
  if (result.report.instances_placed > 0) {
    CHECK(inserted_ids.size() == static_cast<std::size_t>(result.report.instances_placed));
    for (uint16_t id : inserted_ids) CHECK(id >= 1);
  }

  // Reports name the sampled class for every instance.
  REQUIRE(result.report.instances.size() ==
          static_cast<std::size_t>(fixture.config.instances_per_scan));
  for (const InstanceReport& instance : result.report.instances) {
    CHECK((instance.class_name == "car" || instance.class_name == "person"));
    if (instance.placed) {
      CHECK(instance.points_added > 0);
    } else {
      CHECK_FALSE(instance.failure_reason.empty());
    }
  }
}

TEST_CASE("detection mode emits one box per placed instance") {
  PipelineFixture fixture;
  fixture.config.mode = AnnotationMode::detection;
  fixture.config.instances_per_scan = 1;
  fixture.config.noise_fraction = 0.0;
  fixture.config.drop_probability = 0.0;
  const Dependencies deps = load_dependencies(fixture.config);
  const PointCloud cloud = read_point_cloud(fixture.dir.path() / "scans/000000.bin");
  ScanAnnotations annotations;
  annotations.mode = AnnotationMode::detection;

  Rng rng(6);
  const AugmentResult result = augment_scan(cloud, annotations, fixture.config, deps, rng);
  REQUIRE(result.report.instances_placed == 1);
  REQUIRE(result.annotations.boxes.size() == 1);
  const BoxAnnotation& box = result.annotations.boxes[0];
  CHECK(box.length > 0.0);
  CHECK((box.class_id == 10 || box.class_id == 30));
  CHECK(box.yaw > -M_PI);
  CHECK(box.yaw <= M_PI);

  // With one instance and noise disabled, the appended tail is exactly its
  // point set; every point lies inside the emitted box.
  const std::size_t added = result.report.points_added;
  REQUIRE(added > 0);
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  for (std::size_t i = result.cloud.size() - added; i < result.cloud.size(); ++i) {
    const Point& p = result.cloud.points[i];
    const double dx = p.x - box.cx, dy = p.y - box.cy, dz = p.z - box.cz;
    CHECK(std::abs(c * dx + s * dy) <= 0.5 * box.length + 1e-5);
    CHECK(std::abs(-s * dx + c * dy) <= 0.5 * box.width + 1e-5);
    CHECK(std::abs(dz) <= 0.5 * box.height + 1e-5);
  }
}

TEST_CASE("mismatched label streams are rejected") {
  PipelineFixture fixture;
  const Dependencies deps = load_dependencies(fixture.config);
  const PointCloud cloud = read_point_cloud(fixture.dir.path() / "scans/000000.bin");
  ScanAnnotations annotations;
  annotations.mode = AnnotationMode::segmentation;
  annotations.labels.labels.assign(cloud.size() - 1, PointLabel{40, 0});
  Rng rng(1);
  CHECK_THROWS_AS(augment_scan(cloud, annotations, fixture.config, deps, rng), Error);
}

TEST_CASE("augment_scan is deterministic for a fixed seed") {
  PipelineFixture fixture;
  const Dependencies deps = load_dependencies(fixture.config);
  const PointCloud cloud = read_point_cloud(fixture.dir.path() / "scans/000001.bin");
  ScanAnnotations annotations;
  annotations.mode = AnnotationMode::segmentation;
  annotations.labels = read_labels(fixture.dir.path() / "scans/000001.label");

  Rng rng_a(123), rng_b(123);
  const AugmentResult a = augment_scan(cloud, annotations, fixture.config, deps, rng_a);
  const AugmentResult b = augment_scan(cloud, annotations, fixture.config, deps, rng_b);
  CHECK(same_bytes(a.cloud, b.cloud));
  CHECK(a.annotations.labels.labels == b.annotations.labels.labels);
}

TEST_CASE("dataset runs mirror inputs, write a report and rerun identically") {
  PipelineFixture fixture(3);
  const auto out_a = fixture.dir / "out_a";
  const auto out_b = fixture.dir / "out_b";

  const AggregateReport report_a = augment_dataset(fixture.dir / "scans", out_a, fixture.config);
  CHECK(report_a.scans.size() == 3);
  CHECK(report_a.scans_failed == 0);
  for (int s = 0; s < 3; ++s) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d", s);
    CHECK(std::filesystem::exists(out_a / (std::string(name) + ".bin")));
    CHECK(std::filesystem::exists(out_a / (std::string(name) + ".label")));
  }
  CHECK(std::filesystem::exists(out_a / "report.json"));
  for (const ScanReport& scan : report_a.scans) {
    CHECK(scan.instances_placed + scan.instances_failed == fixture.config.instances_per_scan);
  }

  const AggregateReport report_b = augment_dataset(fixture.dir / "scans", out_b, fixture.config);
  (void)report_b;
  CHECK(testsupport::tree_digest(out_a) == testsupport::tree_digest(out_b));
}

TEST_CASE("per-scan seeding isolates scans from each other") {
  PipelineFixture fixture(3);
  const auto out_full = fixture.dir / "out_full";
  augment_dataset(fixture.dir / "scans", out_full, fixture.config);

  // Drop one scan and rerun into a fresh directory: the remaining outputs
  // must be byte-identical.
  std::filesystem::remove(fixture.dir.path() / "scans/000001.bin");
  std::filesystem::remove(fixture.dir.path() / "scans/000001.label");
  const auto out_partial = fixture.dir / "out_partial";
  augment_dataset(fixture.dir / "scans", out_partial, fixture.config);

  for (const char* name : {"000000", "000002"}) {
    CHECK(testsupport::file_digest(out_full / (std::string(name) + ".bin")) ==
          testsupport::file_digest(out_partial / (std::string(name) + ".bin")));
    CHECK(testsupport::file_digest(out_full / (std::string(name) + ".label")) ==
          testsupport::file_digest(out_partial / (std::string(name) + ".label")));
  }
}

TEST_CASE("worker count resolution: config beats the environment") {
  AugmentationConfig config;
  config.workers = 3;
  CHECK(resolve_worker_count(config) == 3);

  config.workers = 0;
  setenv("INSTAUG_WORKERS", "6", 1);
  CHECK(resolve_worker_count(config) == 6);
  setenv("INSTAUG_WORKERS", "not-a-number", 1);
  CHECK(resolve_worker_count(config) >= 1);
  unsetenv("INSTAUG_WORKERS");
  CHECK(resolve_worker_count(config) >= 1);
}

TEST_CASE("worker counts do not change the outputs") {
  PipelineFixture fixture(4);
  const auto out_serial = fixture.dir / "serial";
  const auto out_parallel = fixture.dir / "parallel";
  AugmentationConfig serial = fixture.config;
  serial.workers = 1;
  AugmentationConfig parallel = fixture.config;
  parallel.workers = 4;
  augment_dataset(fixture.dir / "scans", out_serial, serial);
  augment_dataset(fixture.dir / "scans", out_parallel, parallel);
  CHECK(testsupport::tree_digest(out_serial) == testsupport::tree_digest(out_parallel));
}
