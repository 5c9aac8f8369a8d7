#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hcraft/env/simulator.hpp"
#include "hcraft/script/ast.hpp"
#include "hcraft/script/parser.hpp"

namespace hcraft::script {

/// The only channel through which a script touches the world.
class Actuator {
 public:
  virtual ~Actuator() = default;
  virtual const env::StepResult& step(const env::MultiDiscreteAction& action) = 0;
  virtual const env::Observation& observation() const = 0;
  virtual bool done() const = 0;
  virtual bool success() const = 0;
  /// Craft-argument index of a recipe producing `item`, if any.
  virtual std::optional<int> craft_index(std::string_view item) const = 0;
};

/// Actuator over a live Env. An optional hook sees every step (reward accounting, logging).
class EnvActuator : public Actuator {
 public:
  using StepHook = std::function<void(const env::MultiDiscreteAction&, const env::StepResult&)>;

  explicit EnvActuator(env::Env& env, StepHook hook = {}) : env_(env), hook_(std::move(hook)) {}
  const env::StepResult& step(const env::MultiDiscreteAction& action) override;
  const env::Observation& observation() const override { return env_.observation(); }
  bool done() const override { return env_.done(); }
  bool success() const override { return env_.state().success; }
  std::optional<int> craft_index(std::string_view item) const override;

 private:
  env::Env& env_;
  StepHook hook_;
};

enum class ScriptStatus { kSuccess, kFailure, kStepCapExhausted, kRuntimeFault };
std::string_view status_name(ScriptStatus s);

struct ScriptOutcome {
  ScriptStatus status = ScriptStatus::kSuccess;
  int steps_used = 0;
  std::vector<std::string> trace;  // one entry per primitive issued plus env events
  env::Observation obs_before;
  env::Observation obs_after;
  std::string detail;        // fault or exhaustion reason
  bool episode_ended = false;
};

/// Runs the script against the actuator. Stops at halt, budget exhaustion, a loop cap, a fault or
/// the end of the episode. Throws ContractViolation when step_budget <= 0.
ScriptOutcome interpret(const ScriptAst& ast, Actuator& actuator, int step_budget);

/// Primitive to action translation against the current observation. Throws std::runtime_error
/// when the primitive cannot be expressed (unknown recipe, item not held).
env::MultiDiscreteAction primitive_action(const Primitive& prim, const Actuator& actuator);

/// A compiled script usable as one action token.
class MacroAction {
 public:
  MacroAction(std::string id, ScriptAst ast);

  const std::string& id() const { return id_; }
  const ScriptAst& ast() const { return ast_; }
  std::string source() const { return canonical_print(ast_); }

  struct Result {
    int frames = 0;
    ScriptOutcome outcome;
  };
  /// Runs the whole script as one semantic action. A script that issues no step performs one
  /// noop so every token advances time.
  Result run(Actuator& actuator, int frame_budget) const;

 private:
  std::string id_;
  ScriptAst ast_;
};

/// Rejects scripts that fail unconditionally (a `halt failure` reachable on every path).
/// Throws DslError with code degenerate-macro.
MacroAction compile_macro(std::string id, const ScriptAst& ast);

}  // namespace hcraft::script
