#pragma once

#include <set>
#include <string>
#include <vector>

#include "hcraft/agents/backend.hpp"
#include "hcraft/common/errors.hpp"
#include "hcraft/env/registry.hpp"

namespace hcraft::agents {

class PlannerError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Direct prerequisites of an item: recipe inputs (plus crafting_table for table recipes), or the
/// tool its harvest rule requires. Raw resources have none.
std::vector<std::string> prerequisites(const env::Registry& registry, const std::string& item);

/// `item` and everything it depends on, prerequisites first; ties broken by name.
/// Throws PlannerError on a dependency cycle or an item no recipe or harvest rule produces.
std::vector<std::string> dependency_order(const env::Registry& registry, const std::string& item);

/// Sub-task chain for a goal: unsolved items of its dependency order, each mapped to the registered
/// task targeting it or to a synthesized task in the goal's biome. With a backend, the planner agent
/// proposes the order and the proposal must list exactly those items with prerequisites first;
/// anything else throws PlannerError.
std::vector<env::TaskSpec> task_planner(const env::TaskSpec& goal, const env::Registry& registry,
                                        const std::set<std::string>& solved, Backend* backend = nullptr);

/// Keeps only sub-tasks that are registered task presets.
std::vector<env::TaskSpec> registered_only(const std::vector<env::TaskSpec>& chain, const env::Registry& registry);

}  // namespace hcraft::agents
