#include "hcraft/script/interpreter.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hcraft/common/errors.hpp"

namespace hcraft::script {

const env::StepResult& EnvActuator::step(const env::MultiDiscreteAction& action) {
  const auto& r = env_.step(action);
  if (hook_) hook_(action, r);
  return r;
}

std::optional<int> EnvActuator::craft_index(std::string_view item) const {
  return env_.simulator().registry().recipe_index(item);
}

std::string_view status_name(ScriptStatus s) {
  switch (s) {
    case ScriptStatus::kSuccess: return "success";
    case ScriptStatus::kFailure: return "failure";
    case ScriptStatus::kStepCapExhausted: return "step-cap-exhausted";
    case ScriptStatus::kRuntimeFault: return "runtime-fault";
  }
  return "unknown";
}

env::MultiDiscreteAction primitive_action(const Primitive& prim, const Actuator& actuator) {
  using env::Functional;
  env::MultiDiscreteAction a;
  const auto& op = prim.op;
  auto functional = [&](Functional f) { a.functional = static_cast<int>(f); };
  auto slot_of = [&](const std::string& item) {
    const auto& names = actuator.observation().inventory_names;
    auto it = std::find(names.begin(), names.end(), item);
    if (it == names.end()) throw std::runtime_error("item '" + item + "' is not in the inventory");
    return static_cast<int>(it - names.begin());
  };
  if (op == "noop") {
  } else if (op == "attack") {
    functional(Functional::kAttack);
  } else if (op == "use") {
    functional(Functional::kUse);
  } else if (op == "forward") {
    a.move = 1;
  } else if (op == "back") {
    a.move = 2;
  } else if (op == "left") {
    a.strafe = 1;
  } else if (op == "right") {
    a.strafe = 2;
  } else if (op == "jump") {
    a.jump = 1;
  } else if (op == "turn_left") {
    a.yaw_delta = env::kYawNoop - 1;
  } else if (op == "turn_right") {
    a.yaw_delta = env::kYawNoop + 1;
  } else if (op == "craft") {
    const auto idx = actuator.craft_index(prim.item);
    if (!idx) throw std::runtime_error("no recipe produces '" + prim.item + "'");
    functional(Functional::kCraft);
    a.craft_arg = *idx;
  } else if (op == "place") {
    functional(Functional::kPlace);
    a.slot_arg = slot_of(prim.item);
  } else if (op == "destroy") {
    functional(Functional::kDestroy);
    a.slot_arg = slot_of(prim.item);
  } else if (op == "act") {
    a = env::MultiDiscreteAction::from_array(prim.raw);
  } else {
    throw ContractViolation("unknown primitive '" + op + "'");
  }
  return a;
}

namespace {

constexpr long kOperationLimit = 1'000'000;

struct Stop {
  ScriptStatus status;
  std::string detail;
};

enum class Flow { kNext, kStop };

class Machine {
 public:
  Machine(Actuator& act, int budget, ScriptOutcome& out) : act_(act), budget_(budget), out_(out) {}

  Flow block(const std::vector<Stmt>& body) {
    for (const auto& st : body) {
      if (statement(st) == Flow::kStop) return Flow::kStop;
    }
    return Flow::kNext;
  }

 private:
  struct Loop {
    int cap;
    int start_steps;
  };

  void tick_fuel() {
    if (++ops_ > kOperationLimit) throw Stop{ScriptStatus::kStepCapExhausted, "operation limit exhausted"};
  }

  Flow statement(const Stmt& st) {
    tick_fuel();
    switch (st.kind) {
      case Stmt::Kind::kRepeat:
        for (int i = 0; i < st.count; ++i) {
          tick_fuel();
          if (block(st.body) == Flow::kStop) return Flow::kStop;
        }
        return Flow::kNext;
      case Stmt::Kind::kIf:
        if (truth(st.cond)) return block(st.body);
        return st.has_else ? block(st.else_body) : Flow::kNext;
      case Stmt::Kind::kWhile: {
        loops_.push_back({st.count, out_.steps_used});
        int iterations = 0;
        while (truth(st.cond)) {
          if (iterations >= st.count) {
            throw Stop{ScriptStatus::kStepCapExhausted, "while loop cap " + std::to_string(st.count) + " exhausted"};
          }
          ++iterations;
          if (block(st.body) == Flow::kStop) {
            loops_.pop_back();
            return Flow::kStop;
          }
        }
        loops_.pop_back();
        return Flow::kNext;
      }
      case Stmt::Kind::kLet: vars_[st.var] = value(st.value); return Flow::kNext;
      case Stmt::Kind::kHalt:
        out_.status = st.success ? ScriptStatus::kSuccess : ScriptStatus::kFailure;
        out_.detail = st.success ? "halt success" : "halt failure";
        return Flow::kStop;
      case Stmt::Kind::kPrimitive: return step(st.prim);
    }
    return Flow::kNext;
  }

  Flow step(const Primitive& prim) {
    if (out_.steps_used >= budget_) {
      throw Stop{ScriptStatus::kStepCapExhausted, "step budget " + std::to_string(budget_) + " exhausted"};
    }
    for (const auto& loop : loops_) {
      if (out_.steps_used - loop.start_steps >= loop.cap) {
        throw Stop{ScriptStatus::kStepCapExhausted, "while loop cap " + std::to_string(loop.cap) + " exhausted"};
      }
    }
    env::MultiDiscreteAction action;
    try {
      action = primitive_action(prim, act_);
    } catch (const std::runtime_error& e) {
      throw Stop{ScriptStatus::kRuntimeFault, e.what()};
    }
    const env::StepResult* r = nullptr;
    try {
      r = &act_.step(action);
    } catch (const std::out_of_range& e) {
      throw Stop{ScriptStatus::kRuntimeFault, std::string("invalid action: ") + e.what()};
    }
    ++out_.steps_used;
    out_.trace.push_back(prim.item.empty() ? prim.op : prim.op + " " + prim.item);
    for (const auto& ev : r->events) {
      out_.trace.push_back("event " + ev.kind + (ev.item.empty() ? "" : " " + ev.item));
    }
    if (act_.done()) {
      out_.episode_ended = true;
      out_.status = act_.success() ? ScriptStatus::kSuccess : ScriptStatus::kFailure;
      out_.detail = act_.success() ? "task completed" : "episode ended";
      return Flow::kStop;
    }
    return Flow::kNext;
  }

  double field(const std::string& name) const {
    const auto& obs = act_.observation();
    constexpr std::string_view prefix = "nearest_", suffix = "_dist";
    if (name.rfind(prefix, 0) == 0) {
      return obs.nearest(name.substr(prefix.size(), name.size() - prefix.size() - suffix.size()));
    }
    if (name == "front_dist") return obs.center_ray().block_distance;
    if (name == "front_entity_dist") return obs.center_ray().entity_distance;
    if (name == "tick") return static_cast<double>(obs.tick);
    if (name == "pos_x") return obs.pos.x;
    if (name == "pos_y") return obs.pos.y;
    if (name == "yaw") return static_cast<int>(obs.yaw);
    throw ContractViolation("unknown field '" + name + "'");
  }

  double value(const Expr& e) {
    tick_fuel();
    switch (e.kind) {
      case Expr::Kind::kNumber: return e.number;
      case Expr::Kind::kInfinity: return env::kInfinity;
      case Expr::Kind::kField: return field(e.name);
      case Expr::Kind::kVar: {
        auto it = vars_.find(e.name);
        if (it == vars_.end()) throw Stop{ScriptStatus::kRuntimeFault, "variable '" + e.name + "' read before assignment"};
        return it->second;
      }
      case Expr::Kind::kCount: return act_.observation().count(e.name);
      case Expr::Kind::kArith: {
        const double a = value(e.args[0]), b = value(e.args[1]);
        if (std::isinf(a) || std::isinf(b)) {
          throw Stop{ScriptStatus::kRuntimeFault, "arithmetic on infinite value in '" + print_expr(e) + "'"};
        }
        return e.op == "+" ? a + b : a - b;
      }
      default: throw ContractViolation("predicate used as a number");
    }
  }

  bool truth(const Expr& e) {
    tick_fuel();
    const auto& obs = act_.observation();
    switch (e.kind) {
      case Expr::Kind::kBool: return e.flag;
      case Expr::Kind::kFacing: {
        const auto& ray = obs.center_ray();
        return ray.block_name == e.name || ray.entity_name == e.name;
      }
      case Expr::Kind::kNear:
        for (const auto& row : obs.voxels) {
          if (std::find(row.begin(), row.end(), e.name) != row.end()) return true;
        }
        return false;
      case Expr::Kind::kNot: return !truth(e.args[0]);
      case Expr::Kind::kAnd: return truth(e.args[0]) && truth(e.args[1]);
      case Expr::Kind::kOr: return truth(e.args[0]) || truth(e.args[1]);
      case Expr::Kind::kCompare: {
        const double a = value(e.args[0]), b = value(e.args[1]);
        if (e.op == "<") return a < b;
        if (e.op == "<=") return a <= b;
        if (e.op == ">") return a > b;
        if (e.op == ">=") return a >= b;
        if (e.op == "==") return a == b;
        return a != b;
      }
      default: throw ContractViolation("number used as a predicate");
    }
  }

  Actuator& act_;
  int budget_;
  ScriptOutcome& out_;
  std::vector<Loop> loops_;
  std::map<std::string, double> vars_;
  long ops_ = 0;
};

bool fails_unconditionally(const std::vector<Stmt>& body) {
  for (const auto& st : body) {
    switch (st.kind) {
      case Stmt::Kind::kHalt: return !st.success;
      case Stmt::Kind::kRepeat:
        if (fails_unconditionally(st.body)) return true;
        break;
      case Stmt::Kind::kIf:
        if (st.has_else && fails_unconditionally(st.body) && fails_unconditionally(st.else_body)) return true;
        break;
      default: break;
    }
  }
  return false;
}

}  // namespace

ScriptOutcome interpret(const ScriptAst& ast, Actuator& actuator, int step_budget) {
  if (step_budget <= 0) throw ContractViolation("step budget must be positive");
  if (actuator.done()) throw ContractViolation("script started on a finished episode");
  ScriptOutcome out;
  out.obs_before = actuator.observation();
  Machine m(actuator, step_budget, out);
  try {
    if (m.block(ast.statements) == Flow::kNext) {
      out.status = ScriptStatus::kSuccess;
      out.detail = "completed";
    }
  } catch (const Stop& s) {
    out.status = s.status;
    out.detail = s.detail;
  }
  out.obs_after = actuator.observation();
  return out;
}

MacroAction::MacroAction(std::string id, ScriptAst ast) : id_(std::move(id)), ast_(std::move(ast)) {}

MacroAction::Result MacroAction::run(Actuator& actuator, int frame_budget) const {
  Result r;
  r.outcome = interpret(ast_, actuator, frame_budget);
  r.frames = r.outcome.steps_used;
  if (r.frames == 0 && !actuator.done()) {
    actuator.step(env::MultiDiscreteAction{});
    r.frames = 1;
    r.outcome.obs_after = actuator.observation();
  }
  return r;
}

MacroAction compile_macro(std::string id, const ScriptAst& ast) {
  if (ast.statements.empty()) {
    throw DslError(Diagnostic{"empty-program", 1, 1, "macro '" + id + "' has no statements", {}});
  }
  if (fails_unconditionally(ast.statements)) {
    throw DslError(Diagnostic{"degenerate-macro", 1, 1, "macro '" + id + "' halts with failure on every path", {}});
  }
  return MacroAction(std::move(id), ast);
}

}  // namespace hcraft::script
