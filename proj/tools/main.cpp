#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "instaug/config.hpp"
#include "instaug/error.hpp"
#include "instaug/mesh_db.hpp"
#include "instaug/pipeline.hpp"
#include "instaug/prompt.hpp"
#include "instaug/remission.hpp"
#include "instaug/rng.hpp"
#include "instaug/scan_io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace instaug;

std::vector<fs::path> scans_in(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

int run_build_remission(const fs::path& scan_dir, const fs::path& out, double bin_width,
                        std::size_t reservoir, uint64_t seed) {
  const auto files = scans_in(scan_dir);
  if (files.empty()) {
    std::cerr << "no .bin scans found in " << scan_dir << "\n";
    return 1;
  }
  Rng rng(stable_hash64(seed, "remission-table"));
  const RemissionTable table = build_remission_table(files, bin_width, reservoir, rng);
  table.save(out);
  std::size_t populated = 0;
  for (const auto& bin : table.bins()) {
    if (!bin.values.empty()) ++populated;
  }
  std::cout << "remission table: " << files.size() << " scans, " << populated
            << " populated bins -> " << out.string() << "\n";
  return 0;
}

std::vector<ClassSpec> parse_class_list(const std::string& text) {
  if (text.empty()) return default_class_specs();
  std::vector<ClassSpec> specs;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error("expected name=id in class list, got '" + item + "'");
    }
    specs.push_back({item.substr(0, eq), std::stoi(item.substr(eq + 1))});
  }
  return specs;
}

int run_ingest_meshes(const fs::path& mesh_dir, const fs::path& out,
                      const std::optional<fs::path>& scores, const std::string& up,
                      const std::string& forward, const std::string& classes) {
  const MeshManifest manifest = build_manifest(mesh_dir, parse_class_list(classes), scores,
                                               parse_axis(up), parse_axis(forward));
  save_manifest(manifest, out);
  std::size_t total = 0;
  for (const auto& [class_name, records] : manifest.classes) {
    std::cout << "  " << class_name << ": " << records.size() << " meshes\n";
    total += records.size();
  }
  for (const auto& skipped : manifest.skipped) {
    std::cerr << "  skipped " << skipped.relative_path << ": " << skipped.reason << "\n";
  }
  std::cout << "manifest: " << total << " meshes -> " << out.string() << "\n";
  return 0;
}

int run_gen_prompts(const std::optional<fs::path>& recipe_path, const std::string& class_name,
                    int count, uint64_t seed) {
  const PromptRecipe recipe =
      recipe_path ? load_prompt_recipe(*recipe_path) : default_prompt_recipe();
  Rng rng(stable_hash64(seed, "prompts/" + class_name));
  for (int i = 0; i < count; ++i) {
    std::cout << build_prompt(recipe, class_name, rng) << "\n";
  }
  return 0;
}

int run_augment(const std::optional<fs::path>& scan_dir, const std::optional<fs::path>& scan_file,
                const fs::path& out_dir, const fs::path& config_path,
                std::optional<uint64_t> seed, std::optional<int> workers) {
  AugmentationConfig config = load_config(config_path);
  if (seed) config.seed = *seed;
  if (workers) config.workers = *workers;

  if (scan_file) {
    const Dependencies deps = load_dependencies(config);
    const ScanReport report = augment_scan_file(*scan_file, out_dir, config, deps);
    std::cout << report.scan_name << ": placed " << report.instances_placed << "/"
              << (report.instances_placed + report.instances_failed) << ", culled "
              << report.points_culled << ", added " << report.points_added << " ("
              << report.wall_ms << " ms)\n";
    return 0;
  }

  const AggregateReport report = augment_dataset(*scan_dir, out_dir, config);
  std::cout << report.scans.size() << " scans: placed " << report.total_placed()
            << ", failed " << report.total_failed() << " instance placements\n";
  for (const auto& error : report.scan_errors) {
    std::cerr << "scan failed: " << error << "\n";
  }
  return report.scans_failed > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR instance augmentation engine"};
  app.require_subcommand(1);

  // build-remission
  auto* build_cmd = app.add_subcommand(
      "build-remission", "Build a range-binned remission table from a directory of scans");
  fs::path br_scans, br_out;
  double br_bin_width = 1.0;
  std::size_t br_reservoir = 4096;
  uint64_t br_seed = 0;
  build_cmd->add_option("--scans", br_scans, "Directory of .bin scans")
      ->required()
      ->check(CLI::ExistingDirectory);
  build_cmd->add_option("--out", br_out, "Output table file")->required();
  build_cmd->add_option("--bin-width", br_bin_width, "Range bin width in meters");
  build_cmd->add_option("--reservoir", br_reservoir, "Samples kept per bin");
  build_cmd->add_option("--seed", br_seed, "Reservoir sampling seed");

  // ingest-meshes
  auto* ingest_cmd = app.add_subcommand(
      "ingest-meshes", "Normalize meshes under <dir>/<class>/ and write a manifest");
  fs::path im_meshes, im_out;
  std::string im_scores, im_up = "z", im_forward = "x", im_classes;
  ingest_cmd->add_option("--meshes", im_meshes, "Mesh root directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  ingest_cmd->add_option("--out", im_out, "Output manifest file")->required();
  ingest_cmd->add_option("--scores", im_scores, "JSON file mapping mesh path to quality score");
  ingest_cmd->add_option("--up", im_up, "Source up axis (x|y|z, optionally signed)");
  ingest_cmd->add_option("--forward", im_forward, "Source forward axis");
  ingest_cmd->add_option("--classes", im_classes,
                         "Class map as name=id,name=id (default: the eight instance classes)");

  // gen-prompts
  auto* prompts_cmd =
      app.add_subcommand("gen-prompts", "Emit generation prompts for an instance class");
  std::string gp_class;
  std::string gp_recipe;
  int gp_count = 1;
  uint64_t gp_seed = 0;
  prompts_cmd->add_option("--class", gp_class, "Instance class name")->required();
  prompts_cmd->add_option("--recipe", gp_recipe, "Recipe JSON (defaults to the built-in one)");
  prompts_cmd->add_option("--count", gp_count, "Number of prompts");
  prompts_cmd->add_option("--seed", gp_seed, "Sampling seed");

  // augment
  auto* augment_cmd =
      app.add_subcommand("augment", "Augment a scan directory (or one scan) with instances");
  fs::path au_out, au_config;
  std::string au_scans, au_scan;
  uint64_t au_seed = 0;
  int au_workers = 0;
  augment_cmd->add_option("--scans", au_scans, "Input scan directory");
  augment_cmd->add_option("--scan", au_scan, "Single input scan file");
  augment_cmd->add_option("--out", au_out, "Output directory")->required();
  augment_cmd->add_option("--config", au_config, "Config JSON")->required();
  auto* seed_opt = augment_cmd->add_option("--seed", au_seed, "Override the config seed");
  auto* workers_opt = augment_cmd->add_option("--workers", au_workers, "Worker thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems exit 2, --help exits 0
  }

  try {
    if (build_cmd->parsed()) {
      return run_build_remission(br_scans, br_out, br_bin_width, br_reservoir, br_seed);
    }
    if (ingest_cmd->parsed()) {
      return run_ingest_meshes(
          im_meshes, im_out,
          im_scores.empty() ? std::nullopt : std::optional<fs::path>(im_scores), im_up,
          im_forward, im_classes);
    }
    if (prompts_cmd->parsed()) {
      return run_gen_prompts(
          gp_recipe.empty() ? std::nullopt : std::optional<fs::path>(gp_recipe), gp_class,
          gp_count, gp_seed);
    }
    if (augment_cmd->parsed()) {
      if (au_scans.empty() == au_scan.empty()) {
        std::cerr << "augment needs exactly one of --scans or --scan\n";
        return 2;
      }
      return run_augment(
          au_scans.empty() ? std::nullopt : std::optional<fs::path>(au_scans),
          au_scan.empty() ? std::nullopt : std::optional<fs::path>(au_scan), au_out, au_config,
          seed_opt->count() ? std::optional<uint64_t>(au_seed) : std::nullopt,
          workers_opt->count() ? std::optional<int>(au_workers) : std::nullopt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
