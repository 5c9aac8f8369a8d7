#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hcraft/env/types.hpp"

namespace hcraft::env {

struct Recipe {
  std::string output;
  int output_count = 1;
  std::vector<std::pair<std::string, int>> inputs;  // in declaration order
  bool needs_table = false;
};

/// How an item is obtained by breaking a block or killing/using a mob.
struct HarvestRule {
  std::string item;
  std::string source;         // block or mob name
  int hits = 1;               // consecutive attacks to break / kill
  std::string required_tool;  // empty: bare hands; otherwise any listed tool works
  std::vector<std::string> alternative_tools;
  bool via_use = false;       // obtained with `use` (milk, wool) rather than `attack`
  std::string consumes;       // item consumed by `use` (bucket); empty when none
};

struct BiomePreset {
  std::string name;
  int width = 12;
  int height = 12;
  double tree_density = 0.05;
  double stone_density = 0.02;
  double water_density = 0.02;
  int min_trees = 0;
  int min_stones = 0;
  int cows = 0;
  int sheep = 0;
};

/// Recipes, harvest rules, biome presets and task presets loaded from a line-delimited data file.
class Registry {
 public:
  static Registry load(const std::filesystem::path& path);
  static Registry parse(std::string_view text);

  const std::vector<Recipe>& recipes() const { return recipes_; }
  std::optional<Recipe> recipe(std::string_view output) const;
  std::optional<int> recipe_index(std::string_view output) const;

  const std::vector<HarvestRule>& harvest_rules() const { return harvest_; }
  std::optional<HarvestRule> harvest_rule(std::string_view item) const;
  /// Rule for attacking/using the given source name ("tree", "cow", ...).
  std::optional<HarvestRule> rule_for_source(std::string_view source, bool via_use) const;

  const BiomePreset& biome(std::string_view name) const;  // throws ConfigError
  bool has_biome(std::string_view name) const;
  const TaskSpec& task(std::string_view task_id) const;   // throws ConfigError
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  std::vector<std::string> placeable() const { return placeable_; }

  /// Every item name that can appear in an inventory, sorted.
  const std::vector<std::string>& items() const { return items_; }
  bool is_item(std::string_view name) const;

  /// Throws ConfigError when the task references unknown items or biomes.
  void validate(const TaskSpec& task) const;

 private:
  void finalize();

  std::vector<Recipe> recipes_;
  std::vector<HarvestRule> harvest_;
  std::vector<BiomePreset> biomes_;
  std::vector<TaskSpec> tasks_;
  std::vector<std::string> placeable_;
  std::vector<std::string> extra_items_;
  std::vector<std::string> items_;
};

/// Location of the data file shipped with the repository.
std::filesystem::path default_data_path();

}  // namespace hcraft::env
