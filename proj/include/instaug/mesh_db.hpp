#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "instaug/mesh.hpp"
#include "instaug/rng.hpp"

namespace instaug {

struct ClassSpec {
  std::string name;
  int class_id = 0;
};

struct MeshRecord {
  std::string relative_path;  // relative to the manifest's mesh root
  std::string class_name;
  int class_id = 0;
  std::optional<double> quality_score;
  CanonicalBox box;
};

struct SkippedMesh {
  std::string relative_path;
  std::string reason;
};

/// Class-indexed database of normalized meshes. Only metadata is held here;
/// geometry is loaded on demand and normalized with the recorded axes.
struct MeshManifest {
  std::filesystem::path mesh_root;
  Axis up = Axis::pos_z;
  Axis forward = Axis::pos_x;
  std::map<std::string, std::vector<MeshRecord>> classes;
  std::vector<SkippedMesh> skipped;

  const std::vector<MeshRecord>& records_for(const std::string& class_name) const;
};

/// Scans `mesh_root/<class_name>/*.{obj,ply}` for every configured class,
/// normalizes each mesh to validate it and caches its canonical box.
/// Meshes that fail to load or normalize are listed as skipped; directories
/// not in the class map are skipped with a note.
MeshManifest build_manifest(const std::filesystem::path& mesh_root,
                            const std::vector<ClassSpec>& class_map,
                            const std::optional<std::filesystem::path>& score_file,
                            Axis up = Axis::pos_z, Axis forward = Axis::pos_x);

void save_manifest(const MeshManifest& manifest, const std::filesystem::path& path);
MeshManifest load_manifest(const std::filesystem::path& path);

/// Loads and normalizes the record's mesh using the manifest's axes.
Mesh load_record_mesh(const MeshManifest& manifest, const MeshRecord& record);

/// Draws n class names uniformly with replacement, then one mesh uniformly
/// from each drawn class. With top_k set, each class's sampling support is
/// restricted to its k best records by quality score (ties broken by
/// manifest order; unscored records rank last). Throws if a requested class
/// has no records after filtering.
std::vector<const MeshRecord*> sample_meshes(const MeshManifest& manifest,
                                             const std::vector<std::string>& classes,
                                             std::size_t n, Rng& rng,
                                             std::optional<std::size_t> top_k = std::nullopt);

/// The records sample_meshes would draw from for one class.
std::vector<const MeshRecord*> sampling_support(const MeshManifest& manifest,
                                                const std::string& class_name,
                                                std::optional<std::size_t> top_k);

/// Thread-safe load-once cache of normalized meshes keyed by record path.
class MeshCache {
 public:
  std::shared_ptr<const Mesh> get(const MeshManifest& manifest, const MeshRecord& record);

 private:
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
  std::map<std::string, std::shared_ptr<const Mesh>> meshes_;
};

/// The eight instance classes shared by the supported datasets, with their
/// SemanticKITTI class ids.
std::vector<ClassSpec> default_class_specs();

}  // namespace instaug
