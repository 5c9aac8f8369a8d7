#pragma once

#include <array>
#include <string>
#include <vector>

namespace hcraft::script {

/// Predicate or arithmetic node. `args` holds operands in source order.
struct Expr {
  enum class Kind {
    kNumber,   // number
    kInfinity, // the literal `inf`
    kBool,     // flag
    kField,    // name: observation field such as nearest_tree_dist or tick
    kVar,      // name: variable bound by `let`
    kCount,    // name: inventory item
    kFacing,   // name: block/entity on the centre ray
    kNear,     // name: block present in the 3x3 neighbourhood
    kArith,    // op: + or -
    kCompare,  // op: < <= > >= == !=
    kAnd,
    kOr,
    kNot,
  };
  Kind kind = Kind::kNumber;
  double number = 0.0;
  bool flag = false;
  std::string name;
  std::string op;
  std::vector<Expr> args;

  friend bool operator==(const Expr&, const Expr&) = default;
};

/// One env step. `op` is a primitive keyword; craft/place/destroy carry an item in `item`,
/// `act` carries all seven action components in `raw`.
struct Primitive {
  std::string op;
  std::string item;
  std::array<int, 7> raw{};

  friend bool operator==(const Primitive&, const Primitive&) = default;
};

struct Stmt {
  enum class Kind { kRepeat, kIf, kWhile, kPrimitive, kLet, kHalt };
  Kind kind = Kind::kPrimitive;
  int count = 0;  // repeat count or while step-cap
  Expr cond;
  std::vector<Stmt> body;
  std::vector<Stmt> else_body;
  bool has_else = false;
  Primitive prim;
  std::string var;  // let target
  Expr value;       // let value
  bool success = true;  // halt kind

  friend bool operator==(const Stmt&, const Stmt&) = default;
};

struct ScriptAst {
  std::vector<Stmt> statements;
  friend bool operator==(const ScriptAst&, const ScriptAst&) = default;
};

/// Primitive keywords taking no argument.
const std::vector<std::string>& simple_primitives();
/// Primitive keywords taking an item argument.
const std::vector<std::string>& item_primitives();
/// Observation field names predicates may reference.
const std::vector<std::string>& observation_fields();
bool is_observation_field(const std::string& name);

/// Canonical text: two-space indentation, one statement per line, minimal parentheses.
std::string canonical_print(const ScriptAst& ast);
std::string print_expr(const Expr& e);

}  // namespace hcraft::script
