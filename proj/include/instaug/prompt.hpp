#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "instaug/rng.hpp"

namespace instaug {

/// Building blocks for one class's generation prompts. The instruction
/// template may contain the placeholders {size}, {color} and {object};
/// {object} is filled from the union of synonyms and brand names.
struct ClassPromptSpec {
  std::vector<std::string> synonyms;  // at least one
  std::vector<std::string> brands;    // may be empty
  std::vector<std::string> sizes;
  std::vector<std::string> colors;
  std::string instruction = "Generate a {size} {color} {object}";
};

struct PromptRecipe {
  std::map<std::string, ClassPromptSpec> classes;
};

/// Built-in vocabulary covering the eight default instance classes.
PromptRecipe default_prompt_recipe();

/// JSON recipe: {"classes": {"car": {"synonyms": [...], "brands": [...],
/// "sizes": [...], "colors": [...], "instruction": "..."}}}. Missing sizes
/// or colors fall back to the built-in lists.
PromptRecipe load_prompt_recipe(const std::filesystem::path& path);

/// Fills the class's template with independently drawn size, color and
/// object words (in that order). Pure function of (recipe, class, rng state).
std::string build_prompt(const PromptRecipe& recipe, const std::string& class_name, Rng& rng);

}  // namespace instaug
