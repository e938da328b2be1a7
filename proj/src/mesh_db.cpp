#include "instaug/mesh_db.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "instaug/error.hpp"

namespace instaug {

namespace {

using nlohmann::json;

bool is_mesh_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".obj" || ext == ".ply";
}

json box_to_json(const CanonicalBox& box) {
  return json{{"dims", {box.dims.x(), box.dims.y(), box.dims.z()}},
              {"center", {box.center.x(), box.center.y(), box.center.z()}}};
}

CanonicalBox box_from_json(const json& j) {
  CanonicalBox box;
  for (int i = 0; i < 3; ++i) {
    box.dims[i] = j.at("dims").at(i).get<double>();
    box.center[i] = j.at("center").at(i).get<double>();
  }
  return box;
}

}  // namespace

const std::vector<MeshRecord>& MeshManifest::records_for(const std::string& class_name) const {
  const auto it = classes.find(class_name);
  if (it == classes.end()) {
    throw Error("class not present in manifest: " + class_name);
  }
  return it->second;
}

MeshManifest build_manifest(const std::filesystem::path& mesh_root,
                            const std::vector<ClassSpec>& class_map,
                            const std::optional<std::filesystem::path>& score_file,
                            Axis up, Axis forward) {
  if (!std::filesystem::is_directory(mesh_root)) {
    throw Error("mesh root is not a directory: " + mesh_root.string());
  }

  std::map<std::string, double> scores;
  if (score_file) {
    std::ifstream in(*score_file);
    if (!in) {
      throw Error("cannot open score file: " + score_file->string());
    }
    json j;
    in >> j;
    for (const auto& [path, score] : j.items()) {
      scores[path] = score.get<double>();
    }
  }

  std::map<std::string, int> class_ids;
  for (const ClassSpec& spec : class_map) {
    class_ids[spec.name] = spec.class_id;
  }

  MeshManifest manifest;
  manifest.mesh_root = mesh_root;
  manifest.up = up;
  manifest.forward = forward;

  std::vector<std::filesystem::path> class_dirs;
  for (const auto& entry : std::filesystem::directory_iterator(mesh_root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());

  for (const auto& dir : class_dirs) {
    const std::string class_name = dir.filename().string();
    const auto id_it = class_ids.find(class_name);
    if (id_it == class_ids.end()) {
      manifest.skipped.push_back({class_name + "/", "directory does not match a configured class"});
      continue;
    }
    auto& records = manifest.classes[class_name];  // records the class even if it stays empty
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && is_mesh_file(entry.path())) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      const std::string relative = class_name + "/" + file.filename().string();
      try {
        const Mesh normalized = normalize_mesh(load_mesh(file), up, forward);
        MeshRecord record;
        record.relative_path = relative;
        record.class_name = class_name;
        record.class_id = id_it->second;
        record.box = derive_canonical_box(normalized);
        const auto score_it = scores.find(relative);
        if (score_it != scores.end()) {
          record.quality_score = score_it->second;
        }
        records.push_back(std::move(record));
      } catch (const Error& error) {
        manifest.skipped.push_back({relative, error.what()});
      }
    }
  }
  return manifest;
}

void save_manifest(const MeshManifest& manifest, const std::filesystem::path& path) {
  json j;
  j["version"] = 1;
  j["mesh_root"] = manifest.mesh_root.string();
  j["up"] = axis_name(manifest.up);
  j["forward"] = axis_name(manifest.forward);
  json classes = json::object();
  for (const auto& [class_name, records] : manifest.classes) {
    json list = json::array();
    for (const MeshRecord& record : records) {
      json r{{"path", record.relative_path},
             {"class_id", record.class_id},
             {"box", box_to_json(record.box)}};
      if (record.quality_score) {
        r["quality_score"] = *record.quality_score;
      }
      list.push_back(std::move(r));
    }
    classes[class_name] = std::move(list);
  }
  j["classes"] = std::move(classes);
  json skipped = json::array();
  for (const SkippedMesh& s : manifest.skipped) {
    skipped.push_back(json{{"path", s.relative_path}, {"reason", s.reason}});
  }
  j["skipped"] = std::move(skipped);

  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot open file for writing: " + path.string());
  }
  out << j.dump(2) << "\n";
}

MeshManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open manifest: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("malformed manifest " + path.string() + ": " + e.what());
  }
  if (j.value("version", 0) != 1) {
    throw Error("unsupported manifest version in " + path.string());
  }
  MeshManifest manifest;
  std::filesystem::path root = j.at("mesh_root").get<std::string>();
  if (root.is_relative()) {
    root = path.parent_path() / root;
  }
  manifest.mesh_root = root;
  manifest.up = parse_axis(j.at("up").get<std::string>());
  manifest.forward = parse_axis(j.at("forward").get<std::string>());
  for (const auto& [class_name, list] : j.at("classes").items()) {
    auto& records = manifest.classes[class_name];
    for (const auto& r : list) {
      MeshRecord record;
      record.relative_path = r.at("path").get<std::string>();
      record.class_name = class_name;
      record.class_id = r.at("class_id").get<int>();
      record.box = box_from_json(r.at("box"));
      if (r.contains("quality_score")) {
        record.quality_score = r.at("quality_score").get<double>();
      }
      records.push_back(std::move(record));
    }
  }
  if (j.contains("skipped")) {
    for (const auto& s : j.at("skipped")) {
      manifest.skipped.push_back(
          {s.at("path").get<std::string>(), s.at("reason").get<std::string>()});
    }
  }
  return manifest;
}

Mesh load_record_mesh(const MeshManifest& manifest, const MeshRecord& record) {
  return normalize_mesh(load_mesh(manifest.mesh_root / record.relative_path), manifest.up,
                        manifest.forward);
}

std::vector<const MeshRecord*> sampling_support(const MeshManifest& manifest,
                                                const std::string& class_name,
                                                std::optional<std::size_t> top_k) {
  const std::vector<MeshRecord>& records = manifest.records_for(class_name);
  std::vector<const MeshRecord*> support;
  support.reserve(records.size());
  for (const MeshRecord& record : records) {
    support.push_back(&record);
  }
  if (top_k && *top_k < support.size()) {
    // Best scores first; unscored records rank last; ties keep manifest order.
    std::stable_sort(support.begin(), support.end(),
                     [](const MeshRecord* a, const MeshRecord* b) {
                       const double sa = a->quality_score.value_or(
                           -std::numeric_limits<double>::infinity());
                       const double sb = b->quality_score.value_or(
                           -std::numeric_limits<double>::infinity());
                       return sa > sb;
                     });
    support.resize(*top_k);
  }
  return support;
}

std::vector<const MeshRecord*> sample_meshes(const MeshManifest& manifest,
                                             const std::vector<std::string>& classes,
                                             std::size_t n, Rng& rng,
                                             std::optional<std::size_t> top_k) {
  if (classes.empty() && n > 0) {
    throw Error("cannot sample meshes from an empty class list");
  }
  std::vector<std::string> drawn_classes;
  drawn_classes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    drawn_classes.push_back(classes[static_cast<std::size_t>(rng.uniform_index(classes.size()))]);
  }
  std::vector<const MeshRecord*> out;
  out.reserve(n);
  for (const std::string& class_name : drawn_classes) {
    const auto support = sampling_support(manifest, class_name, top_k);
    if (support.empty()) {
      throw Error("no meshes available for class '" + class_name + "'" +
                  (top_k ? " after top-k filtering" : ""));
    }
    out.push_back(support[static_cast<std::size_t>(rng.uniform_index(support.size()))]);
  }
  return out;
}

std::shared_ptr<const Mesh> MeshCache::get(const MeshManifest& manifest,
                                           const MeshRecord& record) {
  {
    std::lock_guard<std::mutex> lock(*mutex_);
    const auto it = meshes_.find(record.relative_path);
    if (it != meshes_.end()) return it->second;
  }
  auto mesh = std::make_shared<const Mesh>(load_record_mesh(manifest, record));
  std::lock_guard<std::mutex> lock(*mutex_);
  return meshes_.emplace(record.relative_path, std::move(mesh)).first->second;
}

std::vector<ClassSpec> default_class_specs() {
  return {{"car", 10},        {"bicycle", 11},     {"motorcycle", 15}, {"truck", 18},
          {"bus", 13},        {"person", 30},      {"bicyclist", 31},  {"motorcyclist", 32}};
}

}  // namespace instaug
