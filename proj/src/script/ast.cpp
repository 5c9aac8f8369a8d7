#include "hcraft/script/ast.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "hcraft/common/errors.hpp"

namespace hcraft::script {

const std::vector<std::string>& simple_primitives() {
  static const std::vector<std::string> v = {"noop",  "attack", "use",       "forward",    "back",
                                             "left",  "right",  "jump",      "turn_left",  "turn_right"};
  return v;
}

const std::vector<std::string>& item_primitives() {
  static const std::vector<std::string> v = {"craft", "place", "destroy"};
  return v;
}

const std::vector<std::string>& observation_fields() {
  static const std::vector<std::string> v = {
      "nearest_tree_dist",  "nearest_stone_dist", "nearest_water_dist", "nearest_crafting_table_dist",
      "nearest_bedrock_dist", "nearest_cow_dist", "nearest_sheep_dist", "front_dist",
      "front_entity_dist",  "tick",               "pos_x",              "pos_y",
      "yaw"};
  return v;
}

bool is_observation_field(const std::string& name) {
  const auto& f = observation_fields();
  return std::find(f.begin(), f.end(), name) != f.end();
}

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kOr: return 1;
    case Expr::Kind::kAnd: return 2;
    case Expr::Kind::kNot: return 3;
    case Expr::Kind::kCompare: return 4;
    case Expr::Kind::kArith: return 5;
    default: return 6;
  }
}

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::fixed);
  if (res.ec != std::errc()) throw ContractViolation("number not printable");
  return std::string(buf, res.ptr);
}

std::string print_at(const Expr& e, int min_prec) {
  std::string s;
  switch (e.kind) {
    case Expr::Kind::kNumber: s = format_number(e.number); break;
    case Expr::Kind::kInfinity: s = "inf"; break;
    case Expr::Kind::kBool: s = e.flag ? "true" : "false"; break;
    case Expr::Kind::kField:
    case Expr::Kind::kVar: s = e.name; break;
    case Expr::Kind::kCount: s = "count(" + e.name + ")"; break;
    case Expr::Kind::kFacing: s = "facing(" + e.name + ")"; break;
    case Expr::Kind::kNear: s = "near(" + e.name + ")"; break;
    case Expr::Kind::kArith:
      if (e.args.size() != 2 || precedence(e.args[1]) < 6) throw ContractViolation("malformed arithmetic node");
      s = print_at(e.args[0], 5) + " " + e.op + " " + print_at(e.args[1], 6);
      break;
    case Expr::Kind::kCompare:
      s = print_at(e.args.at(0), 5) + " " + e.op + " " + print_at(e.args.at(1), 5);
      break;
    case Expr::Kind::kAnd:
    case Expr::Kind::kOr: {
      const int p = precedence(e);
      s = print_at(e.args.at(0), p) + (e.kind == Expr::Kind::kAnd ? " and " : " or ") + print_at(e.args.at(1), p + 1);
      break;
    }
    case Expr::Kind::kNot: s = "not " + print_at(e.args.at(0), 3); break;
  }
  if (precedence(e) < min_prec) return "(" + s + ")";
  return s;
}

void print_block(std::ostringstream& os, const std::vector<Stmt>& body, int indent);

void print_stmt(std::ostringstream& os, const Stmt& st, int indent) {
  os << std::string(static_cast<std::size_t>(indent) * 2, ' ');
  switch (st.kind) {
    case Stmt::Kind::kRepeat:
      os << "repeat " << st.count << ' ';
      print_block(os, st.body, indent);
      break;
    case Stmt::Kind::kIf:
      os << "if " << print_at(st.cond, 0) << ' ';
      print_block(os, st.body, indent);
      if (st.has_else) {
        os << " else ";
        print_block(os, st.else_body, indent);
      }
      break;
    case Stmt::Kind::kWhile:
      os << "while " << print_at(st.cond, 0) << " cap " << st.count << ' ';
      print_block(os, st.body, indent);
      break;
    case Stmt::Kind::kPrimitive:
      if (st.prim.op == "act") {
        os << "act [";
        for (std::size_t i = 0; i < st.prim.raw.size(); ++i) os << (i ? ", " : "") << st.prim.raw[i];
        os << ']';
      } else {
        os << st.prim.op;
        if (!st.prim.item.empty()) os << ' ' << st.prim.item;
      }
      break;
    case Stmt::Kind::kLet: os << "let " << st.var << " = " << print_at(st.value, 5); break;
    case Stmt::Kind::kHalt: os << "halt " << (st.success ? "success" : "failure"); break;
  }
}

void print_block(std::ostringstream& os, const std::vector<Stmt>& body, int indent) {
  if (body.empty()) {
    os << "{ }";
    return;
  }
  os << "{\n";
  for (const auto& st : body) {
    print_stmt(os, st, indent + 1);
    os << '\n';
  }
  os << std::string(static_cast<std::size_t>(indent) * 2, ' ') << '}';
}

}  // namespace

std::string print_expr(const Expr& e) { return print_at(e, 0); }

std::string canonical_print(const ScriptAst& ast) {
  std::ostringstream os;
  for (const auto& st : ast.statements) {
    print_stmt(os, st, 0);
    os << '\n';
  }
  return os.str();
}

}  // namespace hcraft::script
