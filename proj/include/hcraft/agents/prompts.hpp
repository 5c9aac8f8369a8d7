#pragma once

#include <map>
#include <string>
#include <vector>

#include "hcraft/agents/backend.hpp"
#include "hcraft/env/registry.hpp"
#include "hcraft/env/simulator.hpp"
#include "hcraft/ppo/action_space.hpp"

namespace hcraft::agents {

/// Role text plus a body with `{slot}` placeholders and a mandated response format.
struct PromptTemplate {
  std::string agent;             // slow | fast | critic | planner
  std::string role_description;
  std::string body;
  std::string response_format;  // substituted for {response_format}, also emitted verbatim

  /// Slot names referenced by the body, in first-use order.
  std::vector<std::string> slots() const;
  /// System message `[agent:<agent>]` + role description, user message with every slot filled.
  /// Throws ContractViolation naming the first slot without a value.
  std::vector<Message> render(const std::map<std::string, std::string>& values) const;
};

const PromptTemplate& slow_template();
const PromptTemplate& fast_template();
const PromptTemplate& critic_template();
const PromptTemplate& planner_template();

/// Shown to the slow agent once any critique says too-hard-to-code (when tips are enabled).
const std::string& planning_tips();
/// Extra instruction used by the code-only ablation: every sub-action must be coded.
const std::string& code_only_instruction();

/// Environment documents and code examples handed to the agents.
struct ContextBundle {
  std::string task_prompt;
  std::string obs_info;       // observation fields the scripts can read
  std::string act_info;       // action dimensions, regenerated from the live space
  std::string primitives;     // script primitives
  std::string examples;       // reference scripts
  std::string env_summary;    // short description of the world for the slow agent
};

ContextBundle make_context(const env::Registry& registry, const env::TaskSpec& task, const ppo::ExtendedActionSpace& space);

}  // namespace hcraft::agents
