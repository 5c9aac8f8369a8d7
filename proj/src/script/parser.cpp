#include "hcraft/script/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace hcraft::script {

std::string Diagnostic::format() const {
  return "ERR " + code + " " + std::to_string(line) + ":" + std::to_string(col) + " " + message;
}

namespace {

enum class Tok { kIdent, kNumber, kSymbol, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  int line = 1;
  int col = 1;
};

[[noreturn]] void fail(std::string code, int line, int col, std::string message,
                       std::vector<std::string> expected = {}) {
  throw DslError(Diagnostic{std::move(code), line, col, std::move(message), std::move(expected)});
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    std::size_t j = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::kIdent;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      t.kind = Tok::kNumber;
    } else {
      static const std::set<std::string> two = {"<=", ">=", "==", "!="};
      static const std::string one = "{}()[],<>=+-";
      t.kind = Tok::kSymbol;
      if (j + 1 < src.size() && two.count(std::string(src.substr(j, 2)))) {
        j += 2;
      } else if (one.find(c) != std::string::npos) {
        j += 1;
      } else {
        std::string shown = std::isprint(static_cast<unsigned char>(c)) ? std::string(1, c) : "\\x" + std::to_string(static_cast<unsigned char>(c));
        fail("lex", line, col, "unexpected character '" + shown + "'");
      }
    }
    t.text = std::string(src.substr(i, j - i));
    advance(j - i);
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

const std::set<std::string>& keywords() {
  static const std::set<std::string> k = [] {
    std::set<std::string> s = {"repeat", "if",   "else",  "while", "cap",   "halt",   "success", "failure",
                               "let",    "act",  "true",  "false", "not",   "and",    "or",      "count",
                               "facing", "near", "inf"};
    for (const auto& p : simple_primitives()) s.insert(p);
    for (const auto& p : item_primitives()) s.insert(p);
    return s;
  }();
  return k;
}

std::string describe(const Token& t) { return t.kind == Tok::kEnd ? "end of input" : "'" + t.text + "'"; }

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ScriptAst program() {
    ScriptAst ast;
    if (peek().kind == Tok::kEnd) fail("empty-program", peek().line, peek().col, "program has no statements");
    while (peek().kind != Tok::kEnd) {
      if (is(peek(), "}")) fail("syntax", peek().line, peek().col, "unmatched '}'", statement_starts());
      ast.statements.push_back(statement());
    }
    return ast;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  static bool is(const Token& t, std::string_view text) {
    return (t.kind == Tok::kSymbol || t.kind == Tok::kIdent) && t.text == text;
  }
  bool accept(std::string_view text) {
    if (is(peek(), text)) {
      take();
      return true;
    }
    return false;
  }
  [[noreturn]] void unexpected(const std::vector<std::string>& expected) const {
    std::string msg = "expected ";
    if (expected.size() == 1) {
      msg += expected[0];
    } else {
      msg += "one of {";
      for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? ", " : "") + expected[i];
      msg += "}";
    }
    msg += ", found " + describe(peek());
    fail("syntax", peek().line, peek().col, msg, expected);
  }
  void expect(std::string_view text) {
    if (!accept(text)) unexpected({"'" + std::string(text) + "'"});
  }

  static std::vector<std::string> statement_starts() {
    std::vector<std::string> v = {"repeat", "if", "while", "halt", "let", "act"};
    for (const auto& p : simple_primitives()) v.push_back(p);
    for (const auto& p : item_primitives()) v.push_back(p);
    return v;
  }

  int integer(bool positive_count) {
    const Token t = peek();
    if (t.kind != Tok::kNumber || t.text.find('.') != std::string::npos) unexpected({"integer"});
    take();
    long long v = 0;
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (res.ec != std::errc() || v > kMaxCount) {
      fail("bad-count", t.line, t.col, "count " + t.text + " exceeds " + std::to_string(kMaxCount));
    }
    if (positive_count && v < 1) fail("bad-count", t.line, t.col, "count must be at least 1");
    return static_cast<int>(v);
  }

  std::string item_name() {
    const Token t = peek();
    if (t.kind != Tok::kIdent || keywords().count(t.text)) unexpected({"item name"});
    take();
    return t.text;
  }

  std::vector<Stmt> block() {
    const Token open = peek();
    expect("{");
    std::vector<Stmt> body;
    while (!is(peek(), "}")) {
      if (peek().kind == Tok::kEnd) fail("unclosed-block", open.line, open.col, "block opened here is never closed");
      body.push_back(statement());
    }
    take();
    return body;
  }

  Stmt statement() {
    const Token t = peek();
    Stmt st;
    if (t.kind != Tok::kIdent) unexpected(statement_starts());
    const auto& simple = simple_primitives();
    const auto& with_item = item_primitives();
    if (t.text == "repeat") {
      take();
      st.kind = Stmt::Kind::kRepeat;
      st.count = integer(true);
      st.body = block();
    } else if (t.text == "if") {
      take();
      st.kind = Stmt::Kind::kIf;
      st.cond = predicate();
      st.body = block();
      if (accept("else")) {
        st.has_else = true;
        st.else_body = block();
      }
    } else if (t.text == "while") {
      take();
      st.kind = Stmt::Kind::kWhile;
      st.cond = predicate();
      bool capped = false;
      if (accept("cap")) {
        st.count = integer(true);
        capped = true;
      }
      st.body = block();
      if (!capped) fail("missing-cap", t.line, t.col, "while loop needs an explicit 'cap N' step limit");
    } else if (t.text == "halt") {
      take();
      st.kind = Stmt::Kind::kHalt;
      if (accept("success")) {
        st.success = true;
      } else if (accept("failure")) {
        st.success = false;
      } else {
        unexpected({"success", "failure"});
      }
    } else if (t.text == "let") {
      take();
      st.kind = Stmt::Kind::kLet;
      const Token name = peek();
      if (name.kind != Tok::kIdent || keywords().count(name.text) || is_observation_field(name.text)) {
        unexpected({"variable name"});
      }
      take();
      st.var = name.text;
      expect("=");
      st.value = arith();
      vars_.insert(st.var);
    } else if (t.text == "act") {
      take();
      st.kind = Stmt::Kind::kPrimitive;
      st.prim.op = "act";
      expect("[");
      for (std::size_t i = 0; i < st.prim.raw.size(); ++i) {
        if (i) expect(",");
        st.prim.raw[i] = integer(false);
      }
      expect("]");
    } else if (std::find(simple.begin(), simple.end(), t.text) != simple.end()) {
      take();
      st.kind = Stmt::Kind::kPrimitive;
      st.prim.op = t.text;
    } else if (std::find(with_item.begin(), with_item.end(), t.text) != with_item.end()) {
      take();
      st.kind = Stmt::Kind::kPrimitive;
      st.prim.op = t.text;
      st.prim.item = item_name();
    } else {
      unexpected(statement_starts());
    }
    return st;
  }

  Expr predicate() {
    Expr left = conjunction();
    while (accept("or")) {
      Expr e;
      e.kind = Expr::Kind::kOr;
      e.args = {std::move(left), conjunction()};
      left = std::move(e);
    }
    return left;
  }

  Expr conjunction() {
    Expr left = negation();
    while (accept("and")) {
      Expr e;
      e.kind = Expr::Kind::kAnd;
      e.args = {std::move(left), negation()};
      left = std::move(e);
    }
    return left;
  }

  Expr negation() {
    if (accept("not")) {
      Expr e;
      e.kind = Expr::Kind::kNot;
      e.args = {negation()};
      return e;
    }
    return condition_atom();
  }

  Expr named_call(Expr::Kind kind) {
    take();
    expect("(");
    Expr e;
    e.kind = kind;
    e.name = item_name();
    expect(")");
    return e;
  }

  Expr condition_atom() {
    if (accept("(")) {
      Expr e = predicate();
      expect(")");
      return e;
    }
    if (accept("true")) {
      Expr e;
      e.kind = Expr::Kind::kBool;
      e.flag = true;
      return e;
    }
    if (accept("false")) {
      Expr e;
      e.kind = Expr::Kind::kBool;
      e.flag = false;
      return e;
    }
    if (is(peek(), "facing")) return named_call(Expr::Kind::kFacing);
    if (is(peek(), "near")) return named_call(Expr::Kind::kNear);
    Expr left = arith();
    static const std::vector<std::string> ops = {"<", "<=", ">", ">=", "==", "!="};
    const Token t = peek();
    if (t.kind != Tok::kSymbol || std::find(ops.begin(), ops.end(), t.text) == ops.end()) {
      unexpected({"<", "<=", ">", ">=", "==", "!="});
    }
    take();
    Expr e;
    e.kind = Expr::Kind::kCompare;
    e.op = t.text;
    e.args = {std::move(left), arith()};
    return e;
  }

  Expr arith() {
    Expr left = operand();
    while (is(peek(), "+") || is(peek(), "-")) {
      Expr e;
      e.kind = Expr::Kind::kArith;
      e.op = take().text;
      e.args = {std::move(left), operand()};
      left = std::move(e);
    }
    return left;
  }

  Expr operand() {
    const Token t = peek();
    Expr e;
    if (t.kind == Tok::kNumber) {
      take();
      e.kind = Expr::Kind::kNumber;
      std::from_chars(t.text.data(), t.text.data() + t.text.size(), e.number);
      return e;
    }
    if (is(t, "inf")) {
      take();
      e.kind = Expr::Kind::kInfinity;
      return e;
    }
    if (is(t, "count")) return named_call(Expr::Kind::kCount);
    if (t.kind == Tok::kIdent && !keywords().count(t.text)) {
      take();
      e.name = t.text;
      if (is_observation_field(t.text)) {
        e.kind = Expr::Kind::kField;
      } else if (vars_.count(t.text)) {
        e.kind = Expr::Kind::kVar;
      } else {
        fail("unknown-field", t.line, t.col, "unknown observation field '" + t.text + "'");
      }
      return e;
    }
    unexpected({"number", "observation field", "count(item)"});
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> vars_;
};

}  // namespace

ParseResult parse(std::string_view source) {
  try {
    return {parse_or_throw(source)};
  } catch (const DslError& e) {
    return {e.diagnostic()};
  }
}

ScriptAst parse_or_throw(std::string_view source) {
  if (source.size() > kMaxSourceBytes) {
    fail("source-too-large", 1, 1, "script is " + std::to_string(source.size()) + " bytes, limit is 65536");
  }
  Parser p(lex(source));
  return p.program();
}

}  // namespace hcraft::script
