#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "instaug/mesh_db.hpp"
#include "instaug/placement.hpp"
#include "instaug/sensor.hpp"

namespace instaug {

enum class AnnotationMode { segmentation, detection };

AnnotationMode parse_mode(const std::string& name);
std::string mode_name(AnnotationMode mode);

/// Full configuration of one augmentation run. Defaults encode the engine's
/// standard setup: 5 instances per scan over the eight instance classes,
/// 10% dropout, 60% of points noised.
struct AugmentationConfig {
  int instances_per_scan = 5;
  std::vector<ClassSpec> classes = default_class_specs();
  double drop_probability = 0.1;
  double noise_fraction = 0.6;
  double noise_sigma = 0.03;
  std::optional<std::size_t> top_k;
  uint64_t seed = 0;
  AnnotationMode mode = AnnotationMode::segmentation;
  PlacementConfig placement;

  std::string sensor_preset = "hdl64";
  std::optional<SensorModel> sensor_override;

  std::filesystem::path manifest_path;
  std::filesystem::path remission_table_path;

  int workers = 0;  // 0 = hardware concurrency (capped); env INSTAUG_WORKERS overrides

  SensorModel resolve_sensor() const;
  std::vector<std::string> class_names() const;
  void validate() const;
};

/// Reads a JSON config file; missing keys keep their defaults. Relative
/// manifest/table paths resolve against the config file's directory.
AugmentationConfig load_config(const std::filesystem::path& path);

void save_config(const AugmentationConfig& config, const std::filesystem::path& path);

}  // namespace instaug
