#include "hcraft/agents/prompts.hpp"

#include <regex>
#include <set>
#include <sstream>

#include "hcraft/common/errors.hpp"
#include "hcraft/script/ast.hpp"

namespace hcraft::agents {

namespace {

const std::regex& slot_pattern() {
  static const std::regex re(R"(\{([a-z_]+)\})");
  return re;
}

}  // namespace

std::vector<std::string> PromptTemplate::slots() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), slot_pattern()); it != std::sregex_iterator(); ++it) {
    const std::string name = (*it)[1];
    if (seen.insert(name).second) out.push_back(name);
  }
  return out;
}

std::vector<Message> PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), slot_pattern()); it != std::sregex_iterator(); ++it) {
    const std::string name = (*it)[1];
    out.append(body, last, static_cast<std::size_t>(it->position()) - last);
    if (name == "response_format") {
      out += response_format;
    } else {
      const auto v = values.find(name);
      if (v == values.end()) throw ContractViolation("prompt slot {" + name + "} of the " + agent + " template is unfilled");
      out += v->second;
    }
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(body, last);
  return {{"system", "[agent:" + agent + "]\n" + role_description}, {"user", out}};
}

const PromptTemplate& slow_template() {
  static const PromptTemplate t{
      "slow",
      "You are playing a small crafting game on a grid. Assume you are a programmer who writes short scripts "
      "to complete parts of this game, and a reinforcement learning researcher who decides what a policy "
      "network should learn.",
      "It is difficult to code all actions in this game. We only want to code as many sub-actions as possible. "
      "Tell me which sub-actions can be coded by you in the action script language and which single sub-action "
      "must be learned by reinforcement learning.\n"
      "{mode_instruction}\n"
      "Round: {round}\n"
      "Task: {task}\n"
      "Context:\n{context}\n"
      "Critique:\n{critique}\n"
      "\n"
      "Here are some actions coded by humans:\n{programs}\n"
      "\n"
      "You should then respond to me with\n"
      "Explain (if applicable): Why can these actions be coded? Are there any actions difficult to code?\n"
      "Actions can be coded: List every sub-action in order. Mark each one `mode: code` or `mode: learn`; coded "
      "ones also say `use: sequential` (runs once after reset) or `use: macro` (added to the policy's action "
      "space as one token).\n"
      "{planning_tips}\n"
      "You should only respond in the format as described below:\n"
      "{response_format}\n",
      "Explain: ...\n"
      "Actions can be coded:\n"
      "1) Action1: <sub-action> | mode: code | use: sequential | explain: ...\n"
      "2) Action2: <sub-action> | mode: code | use: macro | explain: ...\n"
      "3) Action3: <sub-action> | mode: learn | explain: ..."};
  return t;
}

const PromptTemplate& fast_template() {
  static const PromptTemplate t{
      "fast",
      "We want to write action scripts to complete some actions in a small crafting game. You are a helpful "
      "assistant that writes the script for the given action.",
      "Here are the primitives of the action script language:\n{primitives}\n"
      "\n"
      "Here are some reference examples written by me:\n{examples}\n"
      "\n"
      "Here are the attributes of the obs that can be used:\n{obs_info}\n"
      "\n"
      "Here are the guidelines of the act variable:\n{act_info}\n"
      "\n"
      "Task: {task}\n"
      "Context: {context}\n"
      "Attempt: {attempt}\n"
      "Code from the last round:\n{last_code}\n"
      "Execution error:\n{execution_error}\n"
      "Critique:\n{critique}\n"
      "\n"
      "You should then respond to me with\n"
      "Explain (if applicable): Can the code complete the given action? What do the execution error and the "
      "critique imply?\n"
      "\n"
      "You should only respond in the format as described below:\n"
      "{response_format}\n",
      "Explain: ...\n"
      "Code:\n"
      "```hcs\n"
      "<one script>\n"
      "```"};
  return t;
}

const PromptTemplate& critic_template() {
  static const PromptTemplate t{
      "critic",
      "You judge whether a scripted action in a small crafting game achieved its intent, using the observations "
      "before and after it ran.",
      "Action: {task}\n"
      "Observation before: {obs_before}\n"
      "Observation after: {obs_after}\n"
      "Execution status: {status}\n"
      "\n"
      "You should only respond in the format as described below:\n"
      "{response_format}\n",
      "Verdict: success | failure\n"
      "Rationale: ..."};
  return t;
}

const PromptTemplate& planner_template() {
  static const PromptTemplate t{
      "planner",
      "You organise a long crafting goal into sub-tasks, each learned or coded separately.",
      "Goal: {task}\n"
      "Recipes:\n{recipes}\n"
      "Already solved: {solved}\n"
      "\n"
      "List the sub-tasks that still need to be solved, prerequisites first.\n"
      "You should only respond in the format as described below:\n"
      "{response_format}\n",
      "Subtasks:\n"
      "1) <item>\n"
      "2) <item>"};
  return t;
}

const std::string& planning_tips() {
  static const std::string tips =
      "Important Tips:\n"
      "1) If it is unsuccessful to code one action in the last round, it means the action is too difficult for "
      "coding.\n"
      "2) If one action in the last round is too difficult to code, try to further subdivide the action. For "
      "example, if \"attacking the tree 20 times\" is difficult, try \"simply attacking 20 times\".\n"
      "3) Please refer to the additional knowledge about the game in the context. It is very useful.\n";
  return tips;
}

const std::string& code_only_instruction() {
  static const std::string s = "Mode: code-only. Every sub-action must be coded; nothing will be learned.";
  return s;
}

ContextBundle make_context(const env::Registry& registry, const env::TaskSpec& task, const ppo::ExtendedActionSpace& space) {
  ContextBundle c;
  c.task_prompt = task.prompt;

  std::ostringstream obs;
  obs << "Numeric fields (inf when nothing is seen):";
  for (const auto& f : script::observation_fields()) obs << ' ' << f;
  obs << "\ncount(<item>) is the inventory count of an item.\n"
      << "facing(<name>) is true when the centre ray reports that block or entity.\n"
      << "near(<name>) is true when that block is in the 3x3 cells around the agent.\n"
      << "Items:";
  for (const auto& item : registry.items()) obs << ' ' << item;
  c.obs_info = obs.str();

  static const char* const kDimText[] = {
      "Forward and backward; 0: noop, 1: forward, 2: back",
      "Move left and right; 0: noop, 1: move left, 2: move right",
      "Jump; 0: noop, 1: jump",
      "Camera delta yaw; bin k turns by (k-4) quarter turns, 4: no turn",
      "Functional actions; 0: noop, 1: use, 2: attack, 3: craft, 4: place, 5: destroy",
      "Argument for craft; recipe index",
      "Argument for place and destroy; inventory slot index"};
  std::ostringstream act;
  const auto card = space.cardinalities();
  act << "The action space is multi-discrete: [";
  for (std::size_t i = 0; i < card.size(); ++i) act << (i ? ", " : "") << card[i];
  act << "]\n";
  for (std::size_t i = 0; i < card.size(); ++i) act << "Index " << i << "; " << kDimText[i] << "\n";
  for (const auto& m : space.macros()) {
    act << "Functional token " << space.token_of(m.id()) << ": coded action '" << m.id() << "'\n";
  }
  act << "Recipes:";
  for (const auto& r : registry.recipes()) act << ' ' << r.output;
  c.act_info = act.str();

  std::ostringstream prim;
  prim << "Primitives:";
  for (const auto& p : script::simple_primitives()) prim << ' ' << p;
  for (const auto& p : script::item_primitives()) prim << ' ' << p << " <item>";
  prim << "\nStatements: repeat N { ... }, if <cond> { ... } else { ... }, while <cond> cap N { ... }, "
          "let x = <expr>, halt success, halt failure, act [7 integers]";
  c.primitives = prim.str();

  c.examples =
      "# walk until something blocks the way\n"
      "while front_dist > 1 cap 20 { forward }\n"
      "# look around for water\n"
      "while not facing(water) cap 4 { turn_right }\n"
      "# turn planks into sticks\n"
      "if count(planks) >= 2 { craft stick }\n";

  std::ostringstream world;
  world << "The world is a " << registry.biome(task.biome).width << "x" << registry.biome(task.biome).height
        << " grid (" << task.biome << "). An episode lasts at most " << task.max_steps
        << " steps. Trees give a log after 20 consecutive attacks; stone gives cobblestone after 30 with a "
           "pickaxe.";
  c.env_summary = world.str();
  return c;
}

}  // namespace hcraft::agents
