#include "instaug/prompt.hpp"

#include <fstream>
#include <json.hpp>

#include "instaug/error.hpp"

namespace instaug {

namespace {

using nlohmann::json;

const std::vector<std::string>& default_sizes() {
  static const std::vector<std::string> sizes = {"small", "large", "big", "tall", "long"};
  return sizes;
}

const std::vector<std::string>& default_colors() {
  static const std::vector<std::string> colors = {"red",    "blue",  "green",  "black",
                                                  "white",  "yellow", "purple", "silver"};
  return colors;
}

ClassPromptSpec make_spec(std::vector<std::string> synonyms, std::vector<std::string> brands) {
  ClassPromptSpec spec;
  spec.synonyms = std::move(synonyms);
  spec.brands = std::move(brands);
  spec.sizes = default_sizes();
  spec.colors = default_colors();
  return spec;
}

void replace_all(std::string& text, const std::string& placeholder, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

}  // namespace

PromptRecipe default_prompt_recipe() {
  PromptRecipe recipe;
  recipe.classes["car"] =
      make_spec({"car", "sports car", "convertible", "sedan", "SUV"}, {"Ford"});
  recipe.classes["person"] =
      make_spec({"person", "man", "woman", "pedestrian", "human"}, {});
  recipe.classes["bicycle"] =
      make_spec({"bicycle", "bike", "road bike", "mountain bike"}, {});
  recipe.classes["bicyclist"] =
      make_spec({"bicyclist", "cyclist", "person riding a bicycle"}, {});
  recipe.classes["motorcycle"] = make_spec({"motorcycle", "motorbike", "scooter"}, {});
  recipe.classes["motorcyclist"] =
      make_spec({"motorcyclist", "person riding a motorcycle"}, {});
  recipe.classes["truck"] = make_spec({"truck", "lorry", "semi truck", "pickup truck"}, {});
  recipe.classes["bus"] = make_spec({"bus", "city bus", "school bus", "coach"}, {});
  return recipe;
}

PromptRecipe load_prompt_recipe(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open prompt recipe: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("malformed prompt recipe " + path.string() + ": " + e.what());
  }
  PromptRecipe recipe;
  for (const auto& [class_name, spec_json] : j.at("classes").items()) {
    ClassPromptSpec spec;
    spec.synonyms = spec_json.at("synonyms").get<std::vector<std::string>>();
    if (spec.synonyms.empty()) {
      throw Error("class '" + class_name + "' needs at least one synonym");
    }
    spec.brands = spec_json.value("brands", std::vector<std::string>{});
    spec.sizes = spec_json.value("sizes", default_sizes());
    spec.colors = spec_json.value("colors", default_colors());
    spec.instruction = spec_json.value("instruction", spec.instruction);
    recipe.classes[class_name] = std::move(spec);
  }
  return recipe;
}

std::string build_prompt(const PromptRecipe& recipe, const std::string& class_name, Rng& rng) {
  const auto it = recipe.classes.find(class_name);
  if (it == recipe.classes.end()) {
    throw Error("no prompt recipe for class: " + class_name);
  }
  const ClassPromptSpec& spec = it->second;
  if (spec.synonyms.empty()) {
    throw Error("class '" + class_name + "' has no synonyms");
  }
  std::vector<std::string> objects = spec.synonyms;
  objects.insert(objects.end(), spec.brands.begin(), spec.brands.end());

  const auto pick = [&rng](const std::vector<std::string>& words) -> std::string {
    if (words.empty()) return "";
    return words[static_cast<std::size_t>(rng.uniform_index(words.size()))];
  };
  const std::string size = pick(spec.sizes);
  const std::string color = pick(spec.colors);
  const std::string object = pick(objects);

  std::string prompt = spec.instruction;
  replace_all(prompt, "{size}", size);
  replace_all(prompt, "{color}", color);
  replace_all(prompt, "{object}", object);
  return prompt;
}

}  // namespace instaug
