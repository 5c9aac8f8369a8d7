#include "hcraft/agents/planner.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <sstream>

#include "hcraft/agents/prompts.hpp"

namespace hcraft::agents {

std::vector<std::string> prerequisites(const env::Registry& registry, const std::string& item) {
  for (const auto& r : registry.recipes()) {
    if (r.output != item) continue;
    std::vector<std::string> deps;
    for (const auto& [name, count] : r.inputs) deps.push_back(name);
    if (r.needs_table) deps.emplace_back("crafting_table");
    return deps;
  }
  for (const auto& h : registry.harvest_rules()) {
    if (h.item != item) continue;
    if (h.required_tool.empty()) return {};
    return {h.required_tool};
  }
  throw PlannerError("no recipe or harvest rule produces '" + item + "'");
}

std::vector<std::string> dependency_order(const env::Registry& registry, const std::string& item) {
  std::map<std::string, std::vector<std::string>> deps;
  std::vector<std::string> stack{item};
  while (!stack.empty()) {
    const auto cur = stack.back();
    stack.pop_back();
    if (deps.count(cur)) continue;
    deps[cur] = prerequisites(registry, cur);
    for (const auto& d : deps[cur]) stack.push_back(d);
  }
  std::map<std::string, int> pending;
  std::map<std::string, std::vector<std::string>> dependents;
  for (const auto& [node, ds] : deps) {
    std::set<std::string> unique(ds.begin(), ds.end());
    pending[node] = static_cast<int>(unique.size());
    for (const auto& d : unique) dependents[d].push_back(node);
  }
  std::set<std::string> ready;
  for (const auto& [node, n] : pending) {
    if (n == 0) ready.insert(node);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    const auto node = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(node);
    for (const auto& next : dependents[node]) {
      if (--pending[next] == 0) ready.insert(next);
    }
  }
  if (order.size() != deps.size()) throw PlannerError("dependency cycle below '" + item + "'");
  return order;
}

namespace {

env::TaskSpec task_for(const std::string& item, const env::TaskSpec& goal, const env::Registry& registry) {
  if (item == goal.target_item) return goal;
  for (const auto& t : registry.tasks()) {
    if (t.target_item == item) return t;
  }
  env::TaskSpec t;
  t.task_id = "Obtain_" + item;
  t.target_item = item;
  t.max_steps = goal.max_steps;
  t.biome = goal.biome;
  std::string words = item;
  std::replace(words.begin(), words.end(), '_', ' ');
  t.prompt = "obtain " + words;
  return t;
}

std::string recipe_text(const env::Registry& registry) {
  std::ostringstream os;
  for (const auto& r : registry.recipes()) {
    os << "- " << r.output << " <-";
    for (const auto& [name, count] : r.inputs) os << ' ' << count << ' ' << name;
    if (r.needs_table) os << " (at a crafting_table)";
    os << '\n';
  }
  for (const auto& h : registry.harvest_rules()) {
    os << "- " << h.item << " <- " << (h.via_use ? "use on " : "break ") << h.source;
    if (!h.required_tool.empty()) os << " with " << h.required_tool;
    os << '\n';
  }
  return os.str();
}

std::vector<std::string> ask_backend(const env::TaskSpec& goal, const env::Registry& registry,
                                     const std::set<std::string>& solved, Backend& backend) {
  std::string solved_text;
  for (const auto& s : solved) solved_text += (solved_text.empty() ? "" : ", ") + s;
  const auto messages = planner_template().render(
      {{"task", goal.prompt + " (" + goal.target_item + ")"}, {"recipes", recipe_text(registry)},
       {"solved", solved_text.empty() ? "nothing" : solved_text}});
  const std::string response = backend.complete(messages);
  const auto header = response.find("Subtasks:");
  if (header == std::string::npos) throw PlannerError("planner response has no 'Subtasks:' header");
  static const std::regex item_line(R"(^\s*\d+\)\s*([A-Za-z_]+)\s*$)");
  std::vector<std::string> items;
  std::istringstream in(response.substr(header + 9));
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, item_line)) items.push_back(m[1]);
  }
  return items;
}

}  // namespace

std::vector<env::TaskSpec> task_planner(const env::TaskSpec& goal, const env::Registry& registry,
                                        const std::set<std::string>& solved, Backend* backend) {
  std::vector<std::string> needed;
  for (const auto& item : dependency_order(registry, goal.target_item)) {
    if (!solved.count(item)) needed.push_back(item);
  }
  if (backend != nullptr && !needed.empty()) {
    const auto proposed = ask_backend(goal, registry, solved, *backend);
    if (std::set<std::string>(proposed.begin(), proposed.end()) != std::set<std::string>(needed.begin(), needed.end()) ||
        proposed.size() != needed.size()) {
      throw PlannerError("planner proposal does not list exactly the unsolved prerequisites");
    }
    std::set<std::string> done = solved;
    for (const auto& item : proposed) {
      for (const auto& d : prerequisites(registry, item)) {
        if (!done.count(d)) throw PlannerError("planner lists '" + item + "' before its prerequisite '" + d + "'");
      }
      done.insert(item);
    }
    needed = proposed;
  }
  std::vector<env::TaskSpec> chain;
  for (const auto& item : needed) chain.push_back(task_for(item, goal, registry));
  return chain;
}

std::vector<env::TaskSpec> registered_only(const std::vector<env::TaskSpec>& chain, const env::Registry& registry) {
  std::vector<env::TaskSpec> out;
  for (const auto& t : chain) {
    const auto& tasks = registry.tasks();
    if (std::any_of(tasks.begin(), tasks.end(), [&](const env::TaskSpec& r) { return r.task_id == t.task_id; })) {
      out.push_back(t);
    }
  }
  return out;
}

}  // namespace hcraft::agents
