#include "hcraft/env/registry.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hcraft/common/errors.hpp"

#ifndef HCRAFT_DATA_DIR
#define HCRAFT_DATA_DIR "data"
#endif

namespace hcraft::env {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

}  // namespace

Registry Registry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Registry Registry::parse(std::string_view text) {
  Registry reg;
  std::istringstream lines{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError("data line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto kind = get_or<std::string>(rec, "kind", "");
    try {
      if (kind == "recipe") {
        Recipe r;
        r.output = rec.at("output").get<std::string>();
        r.output_count = get_or(rec, "count", 1);
        for (const auto& in : rec.at("inputs")) {
          r.inputs.emplace_back(in.at(0).get<std::string>(), in.at(1).get<int>());
        }
        r.needs_table = get_or(rec, "needs_table", false);
        reg.recipes_.push_back(std::move(r));
      } else if (kind == "harvest") {
        HarvestRule h;
        h.item = rec.at("item").get<std::string>();
        h.source = rec.at("source").get<std::string>();
        h.hits = get_or(rec, "hits", 1);
        h.required_tool = get_or<std::string>(rec, "tool", "");
        h.alternative_tools = get_or<std::vector<std::string>>(rec, "alternatives", {});
        h.via_use = get_or(rec, "via_use", false);
        h.consumes = get_or<std::string>(rec, "consumes", "");
        reg.harvest_.push_back(std::move(h));
      } else if (kind == "placeable") {
        reg.placeable_.push_back(rec.at("item").get<std::string>());
      } else if (kind == "item") {
        reg.extra_items_.push_back(rec.at("name").get<std::string>());
      } else if (kind == "biome") {
        BiomePreset b;
        b.name = rec.at("name").get<std::string>();
        b.width = get_or(rec, "width", 12);
        b.height = get_or(rec, "height", 12);
        b.tree_density = get_or(rec, "trees", 0.0);
        b.stone_density = get_or(rec, "stones", 0.0);
        b.water_density = get_or(rec, "water", 0.0);
        b.min_trees = get_or(rec, "min_trees", 0);
        b.min_stones = get_or(rec, "min_stones", 0);
        b.cows = get_or(rec, "cows", 0);
        b.sheep = get_or(rec, "sheep", 0);
        if (b.width < 3 || b.height < 3) throw ConfigError("biome " + b.name + " smaller than 3x3");
        reg.biomes_.push_back(std::move(b));
      } else if (kind == "task") {
        TaskSpec t;
        t.task_id = rec.at("id").get<std::string>();
        t.target_item = rec.at("target").get<std::string>();
        t.target_count = get_or(rec, "count", 1);
        t.max_steps = rec.at("max_steps").get<int>();
        t.biome = rec.at("biome").get<std::string>();
        t.initial_inventory = get_or<std::map<std::string, int>>(rec, "initial", {});
        t.prompt = get_or<std::string>(rec, "prompt", t.target_item);
        reg.tasks_.push_back(std::move(t));
      } else {
        throw ConfigError("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("data line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  reg.finalize();
  return reg;
}

void Registry::finalize() {
  std::set<std::string> names(extra_items_.begin(), extra_items_.end());
  for (const auto& r : recipes_) {
    names.insert(r.output);
    for (const auto& [item, n] : r.inputs) names.insert(item);
  }
  for (const auto& h : harvest_) {
    names.insert(h.item);
    if (!h.required_tool.empty()) names.insert(h.required_tool);
    for (const auto& t : h.alternative_tools) names.insert(t);
  }
  for (const auto& p : placeable_) names.insert(p);
  items_.assign(names.begin(), names.end());
  for (const auto& t : tasks_) validate(t);
}

std::optional<Recipe> Registry::recipe(std::string_view output) const {
  for (const auto& r : recipes_) {
    if (r.output == output) return r;
  }
  return std::nullopt;
}

std::optional<int> Registry::recipe_index(std::string_view output) const {
  for (std::size_t i = 0; i < recipes_.size(); ++i) {
    if (recipes_[i].output == output) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<HarvestRule> Registry::harvest_rule(std::string_view item) const {
  for (const auto& h : harvest_) {
    if (h.item == item) return h;
  }
  return std::nullopt;
}

std::optional<HarvestRule> Registry::rule_for_source(std::string_view source, bool via_use) const {
  for (const auto& h : harvest_) {
    if (h.source == source && h.via_use == via_use) return h;
  }
  return std::nullopt;
}

bool Registry::has_biome(std::string_view name) const {
  return std::any_of(biomes_.begin(), biomes_.end(), [&](const auto& b) { return b.name == name; });
}

const BiomePreset& Registry::biome(std::string_view name) const {
  for (const auto& b : biomes_) {
    if (b.name == name) return b;
  }
  throw ConfigError("unknown biome '" + std::string(name) + "'");
}

const TaskSpec& Registry::task(std::string_view task_id) const {
  for (const auto& t : tasks_) {
    if (t.task_id == task_id) return t;
  }
  throw ConfigError("unknown task '" + std::string(task_id) + "'");
}

bool Registry::is_item(std::string_view name) const {
  return std::binary_search(items_.begin(), items_.end(), name);
}

void Registry::validate(const TaskSpec& task) const {
  if (task.max_steps <= 0) throw ConfigError("task " + task.task_id + ": max_steps must be positive");
  if (task.target_count <= 0) throw ConfigError("task " + task.task_id + ": target_count must be positive");
  if (!is_item(task.target_item)) {
    throw ConfigError("task " + task.task_id + ": unknown target item '" + task.target_item + "'");
  }
  if (!has_biome(task.biome)) {
    throw ConfigError("task " + task.task_id + ": unknown biome '" + task.biome + "'");
  }
  for (const auto& [item, n] : task.initial_inventory) {
    if (!is_item(item) || n < 0) {
      throw ConfigError("task " + task.task_id + ": bad initial item '" + item + "'");
    }
  }
}

std::filesystem::path default_data_path() {
  return std::filesystem::path(HCRAFT_DATA_DIR) / "minicraft.jsonl";
}

}  // namespace hcraft::env
