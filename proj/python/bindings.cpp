#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "instaug/config.hpp"
#include "instaug/error.hpp"
#include "instaug/mesh_db.hpp"
#include "instaug/pipeline.hpp"
#include "instaug/prompt.hpp"
#include "instaug/remission.hpp"
#include "instaug/rng.hpp"
#include "instaug/scan_io.hpp"
#include "instaug/sensor.hpp"

namespace py = pybind11;
using namespace instaug;

namespace {

py::array_t<float> cloud_to_array(const PointCloud& cloud) {
  py::array_t<float> out({static_cast<py::ssize_t>(cloud.size()), py::ssize_t{4}});
  if (!cloud.empty()) {
    std::memcpy(out.mutable_data(), cloud.points.data(), cloud.size() * sizeof(Point));
  }
  return out;
}

PointCloud array_to_cloud(const py::array_t<float, py::array::c_style | py::array::forcecast>& array) {
  if (array.ndim() != 2 || array.shape(1) != 4) {
    throw py::value_error("point array must have shape (N, 4)");
  }
  PointCloud cloud;
  cloud.points.resize(static_cast<std::size_t>(array.shape(0)));
  if (!cloud.empty()) {
    std::memcpy(cloud.points.data(), array.data(), cloud.size() * sizeof(Point));
  }
  return cloud;
}

py::array_t<uint32_t> labels_to_array(const SemanticLabels& labels) {
  py::array_t<uint32_t> out(static_cast<py::ssize_t>(labels.size()));
  auto view = out.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < view.shape(0); ++i) {
    const PointLabel& label = labels.labels[static_cast<std::size_t>(i)];
    view(i) = static_cast<uint32_t>(label.semantic_id) |
              (static_cast<uint32_t>(label.instance_id) << 16);
  }
  return out;
}

SemanticLabels array_to_labels(
    const py::array_t<uint32_t, py::array::c_style | py::array::forcecast>& array) {
  if (array.ndim() != 1) {
    throw py::value_error("label array must be one-dimensional");
  }
  SemanticLabels labels;
  auto view = array.unchecked<1>();
  labels.labels.reserve(static_cast<std::size_t>(view.shape(0)));
  for (py::ssize_t i = 0; i < view.shape(0); ++i) {
    const uint32_t word = view(i);
    labels.labels.push_back(
        PointLabel{static_cast<uint16_t>(word & 0xffffu), static_cast<uint16_t>(word >> 16)});
  }
  return labels;
}

py::dict report_to_dict(const ScanReport& report) {
  py::dict out;
  out["scan"] = report.scan_name;
  out["placed"] = report.instances_placed;
  out["failed"] = report.instances_failed;
  out["points_culled"] = report.points_culled;
  out["points_added"] = report.points_added;
  out["wall_ms"] = report.wall_ms;
  py::list instances;
  for (const InstanceReport& instance : report.instances) {
    py::dict entry;
    entry["class"] = instance.class_name;
    entry["placed"] = instance.placed;
    if (instance.placed) {
      entry["points_added"] = instance.points_added;
      entry["points_culled"] = instance.points_culled;
      if (instance.placement) {
        entry["distance"] = instance.placement->distance;
        entry["ground_z"] = instance.placement->ground_z;
      }
    } else {
      entry["reason"] = instance.failure_reason;
    }
    instances.append(std::move(entry));
  }
  out["instances"] = std::move(instances);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "LiDAR instance augmentation: mesh placement, ray casting and labeling";

  py::register_exception<Error>(m, "EngineError", PyExc_RuntimeError);

  m.def(
      "read_point_cloud",
      [](const std::filesystem::path& path) { return cloud_to_array(read_point_cloud(path)); },
      py::arg("path"), "Read a .bin scan as an (N, 4) float32 array.");
  m.def(
      "write_point_cloud",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& points,
         const std::filesystem::path& path) { write_point_cloud(array_to_cloud(points), path); },
      py::arg("points"), py::arg("path"));
  m.def(
      "read_labels",
      [](const std::filesystem::path& path) { return labels_to_array(read_labels(path)); },
      py::arg("path"), "Read a .label file as an (N,) uint32 array.");
  m.def(
      "write_labels",
      [](const py::array_t<uint32_t, py::array::c_style | py::array::forcecast>& labels,
         const std::filesystem::path& path) { write_labels(array_to_labels(labels), path); },
      py::arg("labels"), py::arg("path"));

  py::class_<SensorModel>(m, "SensorModel")
      .def_readonly("range_min", &SensorModel::range_min)
      .def_readonly("range_max", &SensorModel::range_max)
      .def_readonly("azimuth_resolution", &SensorModel::azimuth_resolution)
      .def_readonly("ring_elevations", &SensorModel::ring_elevations)
      .def_property_readonly("ring_count", &SensorModel::ring_count);
  m.def("preset_sensor", &preset_sensor, py::arg("name"),
        "Synthetic sensor presets: 'hdl64' or 'vlp32'.");

  py::class_<AugmentationConfig>(m, "AugmentationConfig")
      .def(py::init<>())
      .def_readwrite("instances_per_scan", &AugmentationConfig::instances_per_scan)
      .def_readwrite("drop_probability", &AugmentationConfig::drop_probability)
      .def_readwrite("noise_fraction", &AugmentationConfig::noise_fraction)
      .def_readwrite("noise_sigma", &AugmentationConfig::noise_sigma)
      .def_readwrite("seed", &AugmentationConfig::seed)
      .def_readwrite("workers", &AugmentationConfig::workers)
      .def_readwrite("manifest_path", &AugmentationConfig::manifest_path)
      .def_readwrite("remission_table_path", &AugmentationConfig::remission_table_path)
      .def_property(
          "mode", [](const AugmentationConfig& c) { return mode_name(c.mode); },
          [](AugmentationConfig& c, const std::string& name) { c.mode = parse_mode(name); })
      .def_property(
          "classes",
          [](const AugmentationConfig& c) {
            std::vector<std::pair<std::string, int>> out;
            for (const ClassSpec& spec : c.classes) out.emplace_back(spec.name, spec.class_id);
            return out;
          },
          [](AugmentationConfig& c, const std::vector<std::pair<std::string, int>>& classes) {
            c.classes.clear();
            for (const auto& [name, id] : classes) c.classes.push_back({name, id});
          })
      .def_property(
          "top_k",
          [](const AugmentationConfig& c) { return c.top_k; },
          [](AugmentationConfig& c, std::optional<std::size_t> k) { c.top_k = k; })
      .def("validate", &AugmentationConfig::validate);
  m.def("load_config", &load_config, py::arg("path"));

  m.def("build_prompt",
        [](const std::string& class_name, uint64_t seed, int count,
           const std::optional<std::filesystem::path>& recipe_path) {
          const PromptRecipe recipe =
              recipe_path ? load_prompt_recipe(*recipe_path) : default_prompt_recipe();
          Rng rng(stable_hash64(seed, "prompts/" + class_name));
          std::vector<std::string> prompts;
          prompts.reserve(static_cast<std::size_t>(count));
          for (int i = 0; i < count; ++i) {
            prompts.push_back(build_prompt(recipe, class_name, rng));
          }
          return prompts;
        },
        py::arg("class_name"), py::arg("seed") = 0, py::arg("count") = 1,
        py::arg("recipe_path") = std::nullopt,
        "Deterministic generation prompts for one class.");

  m.def("build_manifest",
        [](const std::filesystem::path& mesh_dir, const std::filesystem::path& out,
           const std::optional<std::filesystem::path>& scores, const std::string& up,
           const std::string& forward) {
          const MeshManifest manifest =
              build_manifest(mesh_dir, default_class_specs(), scores, parse_axis(up),
                             parse_axis(forward));
          save_manifest(manifest, out);
          py::dict counts;
          for (const auto& [class_name, records] : manifest.classes) {
            counts[py::str(class_name)] = records.size();
          }
          return counts;
        },
        py::arg("mesh_dir"), py::arg("out"), py::arg("scores") = std::nullopt,
        py::arg("up") = "z", py::arg("forward") = "x",
        "Ingest meshes under mesh_dir/<class>/ and write a manifest; returns per-class counts.");

  m.def("build_remission_table",
        [](const std::vector<std::filesystem::path>& scans, const std::filesystem::path& out,
           double bin_width, std::size_t reservoir, uint64_t seed) {
          Rng rng(stable_hash64(seed, "remission-table"));
          build_remission_table(scans, bin_width, reservoir, rng).save(out);
        },
        py::arg("scans"), py::arg("out"), py::arg("bin_width") = 1.0,
        py::arg("reservoir") = 4096, py::arg("seed") = 0);

  py::class_<Dependencies>(m, "Dependencies");
  m.def("load_dependencies", &load_dependencies, py::arg("config"),
        "Load the manifest, remission table and sensor for a config.");

  m.def("augment_scan",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& points,
           const std::optional<py::array_t<uint32_t, py::array::c_style | py::array::forcecast>>&
               labels,
           const AugmentationConfig& config, const Dependencies& deps, uint64_t seed) {
          const PointCloud cloud = array_to_cloud(points);
          ScanAnnotations annotations;
          annotations.mode = config.mode;
          if (config.mode == AnnotationMode::segmentation) {
            if (!labels) {
              throw py::value_error("segmentation mode needs a label array");
            }
            annotations.labels = array_to_labels(*labels);
          }
          Rng rng(seed);
          AugmentResult result;
          {
            py::gil_scoped_release release;
            result = augment_scan(cloud, annotations, config, deps, rng);
          }
          py::list boxes;
          for (const BoxAnnotation& box : result.annotations.boxes) {
            boxes.append(py::make_tuple(box.class_id, box.cx, box.cy, box.cz, box.length,
                                        box.width, box.height, box.yaw));
          }
          return py::make_tuple(cloud_to_array(result.cloud),
                                labels_to_array(result.annotations.labels), boxes,
                                report_to_dict(result.report));
        },
        py::arg("points"), py::arg("labels"), py::arg("config"), py::arg("deps"),
        py::arg("seed"),
        "Augment one scan; returns (points, labels, boxes, report).");

  m.def("augment_dataset",
        [](const std::filesystem::path& scan_dir, const std::filesystem::path& out_dir,
           const AugmentationConfig& config) {
          AggregateReport report;
          {
            py::gil_scoped_release release;
            report = augment_dataset(scan_dir, out_dir, config);
          }
          py::dict out;
          out["scans"] = report.scans.size();
          out["scans_failed"] = report.scans_failed;
          out["instances_placed"] = report.total_placed();
          out["instances_failed"] = report.total_failed();
          return out;
        },
        py::arg("scan_dir"), py::arg("out_dir"), py::arg("config"));

#ifdef INSTAUG_VERSION
  m.attr("__version__") = INSTAUG_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
