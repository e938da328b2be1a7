#include "instaug/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "instaug/error.hpp"

namespace instaug {

namespace {
using nlohmann::json;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}  // namespace

AnnotationMode parse_mode(const std::string& name) {
  if (name == "segmentation") return AnnotationMode::segmentation;
  if (name == "detection") return AnnotationMode::detection;
  throw Error("unknown annotation mode: " + name);
}

std::string mode_name(AnnotationMode mode) {
  return mode == AnnotationMode::segmentation ? "segmentation" : "detection";
}

SensorModel AugmentationConfig::resolve_sensor() const {
  if (sensor_override) {
    sensor_override->validate();
    return *sensor_override;
  }
  return preset_sensor(sensor_preset);
}

std::vector<std::string> AugmentationConfig::class_names() const {
  std::vector<std::string> names;
  names.reserve(classes.size());
  for (const ClassSpec& spec : classes) names.push_back(spec.name);
  return names;
}

void AugmentationConfig::validate() const {
  if (instances_per_scan < 0) {
    throw Error("instances_per_scan must be >= 0");
  }
  if (instances_per_scan > 0 && classes.empty()) {
    throw Error("class list must not be empty when instances_per_scan > 0");
  }
  if (drop_probability < 0.0 || drop_probability > 1.0) {
    throw Error("drop_probability must lie in [0, 1]");
  }
  if (noise_fraction < 0.0 || noise_fraction > 1.0) {
    throw Error("noise_fraction must lie in [0, 1]");
  }
  if (noise_sigma < 0.0) {
    throw Error("noise_sigma must be >= 0");
  }
  if (!(placement.distance_min > 0.0) || placement.distance_max < placement.distance_min) {
    throw Error("placement distance range is invalid");
  }
  for (const ClassSpec& spec : classes) {
    if (instances_per_scan > 0 &&
        placement.height_ranges.find(spec.name) == placement.height_ranges.end()) {
      throw Error("no height range configured for class: " + spec.name);
    }
    if (spec.class_id < 0 || spec.class_id > 0xffff) {
      throw Error("class id out of the 16-bit label range: " + spec.name);
    }
  }
  resolve_sensor();
}

AugmentationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open config file: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("malformed config " + path.string() + ": " + e.what());
  }

  AugmentationConfig config;
  config.instances_per_scan = j.value("instances_per_scan", config.instances_per_scan);
  config.drop_probability = j.value("drop_probability", config.drop_probability);
  config.noise_fraction = j.value("noise_fraction", config.noise_fraction);
  config.noise_sigma = j.value("noise_sigma", config.noise_sigma);
  config.seed = j.value("seed", config.seed);
  if (j.contains("top_k")) config.top_k = j.at("top_k").get<std::size_t>();
  if (j.contains("mode")) config.mode = parse_mode(j.at("mode").get<std::string>());
  config.workers = j.value("workers", config.workers);

  if (j.contains("classes")) {
    config.classes.clear();
    for (const auto& entry : j.at("classes")) {
      config.classes.push_back(
          {entry.at("name").get<std::string>(), entry.at("id").get<int>()});
    }
  }

  auto& placement = config.placement;
  placement.distance_min = j.value("distance_min", placement.distance_min);
  placement.distance_max = j.value("distance_max", placement.distance_max);
  placement.footprint_margin = j.value("footprint_margin", placement.footprint_margin);
  placement.ground_clearance = j.value("ground_clearance", placement.ground_clearance);
  placement.ground_percentile = j.value("ground_percentile", placement.ground_percentile);
  placement.expansion_step = j.value("expansion_step", placement.expansion_step);
  placement.max_expansions = j.value("max_expansions", placement.max_expansions);
  placement.max_attempts = j.value("max_attempts", placement.max_attempts);
  if (j.contains("height_ranges")) {
    for (const auto& [name, range] : j.at("height_ranges").items()) {
      placement.height_ranges[name] = {range.at(0).get<double>(), range.at(1).get<double>()};
    }
  }

  if (j.contains("sensor")) {
    const json& sensor_json = j.at("sensor");
    if (sensor_json.contains("preset")) {
      config.sensor_preset = sensor_json.at("preset").get<std::string>();
    } else {
      SensorModel sensor;
      for (const double deg : sensor_json.at("ring_elevations_deg")) {
        sensor.ring_elevations.push_back(deg * kDegToRad);
      }
      sensor.azimuth_resolution = sensor_json.at("azimuth_resolution_deg").get<double>() * kDegToRad;
      sensor.range_min = sensor_json.at("range_min").get<double>();
      sensor.range_max = sensor_json.at("range_max").get<double>();
      sensor.validate();
      config.sensor_override = std::move(sensor);
    }
  }

  const auto resolve = [&path](const std::string& text) {
    std::filesystem::path p = text;
    return p.is_relative() ? path.parent_path() / p : p;
  };
  if (j.contains("manifest")) config.manifest_path = resolve(j.at("manifest").get<std::string>());
  if (j.contains("remission_table")) {
    config.remission_table_path = resolve(j.at("remission_table").get<std::string>());
  }

  config.validate();
  return config;
}

void save_config(const AugmentationConfig& config, const std::filesystem::path& path) {
  json j;
  j["instances_per_scan"] = config.instances_per_scan;
  j["drop_probability"] = config.drop_probability;
  j["noise_fraction"] = config.noise_fraction;
  j["noise_sigma"] = config.noise_sigma;
  j["seed"] = config.seed;
  j["mode"] = mode_name(config.mode);
  if (config.top_k) j["top_k"] = *config.top_k;
  if (config.workers) j["workers"] = config.workers;
  json classes = json::array();
  for (const ClassSpec& spec : config.classes) {
    classes.push_back(json{{"name", spec.name}, {"id", spec.class_id}});
  }
  j["classes"] = std::move(classes);
  j["distance_min"] = config.placement.distance_min;
  j["distance_max"] = config.placement.distance_max;
  j["footprint_margin"] = config.placement.footprint_margin;
  j["ground_clearance"] = config.placement.ground_clearance;
  j["ground_percentile"] = config.placement.ground_percentile;
  j["expansion_step"] = config.placement.expansion_step;
  j["max_expansions"] = config.placement.max_expansions;
  j["max_attempts"] = config.placement.max_attempts;
  json ranges = json::object();
  for (const auto& [name, range] : config.placement.height_ranges) {
    ranges[name] = {range.first, range.second};
  }
  j["height_ranges"] = std::move(ranges);
  if (config.sensor_override) {
    json sensor;
    json elevations = json::array();
    for (const double e : config.sensor_override->ring_elevations) {
      elevations.push_back(e / kDegToRad);
    }
    sensor["ring_elevations_deg"] = std::move(elevations);
    sensor["azimuth_resolution_deg"] = config.sensor_override->azimuth_resolution / kDegToRad;
    sensor["range_min"] = config.sensor_override->range_min;
    sensor["range_max"] = config.sensor_override->range_max;
    j["sensor"] = std::move(sensor);
  } else {
    j["sensor"] = json{{"preset", config.sensor_preset}};
  }
  if (!config.manifest_path.empty()) j["manifest"] = config.manifest_path.string();
  if (!config.remission_table_path.empty()) {
    j["remission_table"] = config.remission_table_path.string();
  }

  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot open config for writing: " + path.string());
  }
  out << j.dump(2) << "\n";
}

}  // namespace instaug
