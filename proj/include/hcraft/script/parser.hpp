#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hcraft/script/ast.hpp"

namespace hcraft::script {

inline constexpr std::size_t kMaxSourceBytes = 64 * 1024;
inline constexpr int kMaxCount = 100000;

/// Machine-readable code plus position. Codes: lex, syntax, unclosed-block, unknown-field,
/// missing-cap, bad-count, empty-program, source-too-large, degenerate-macro.
struct Diagnostic {
  std::string code;
  int line = 1;
  int col = 1;
  std::string message;
  std::vector<std::string> expected;

  /// `ERR <code> <line>:<col> <message>`
  std::string format() const;
  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

class DslError : public std::runtime_error {
 public:
  explicit DslError(Diagnostic d) : std::runtime_error(d.format()), diagnostic_(std::move(d)) {}
  const Diagnostic& diagnostic() const { return diagnostic_; }

 private:
  Diagnostic diagnostic_;
};

struct ParseResult {
  std::variant<ScriptAst, Diagnostic> value;

  bool ok() const { return std::holds_alternative<ScriptAst>(value); }
  const ScriptAst& ast() const { return std::get<ScriptAst>(value); }
  const Diagnostic& diagnostic() const { return std::get<Diagnostic>(value); }
};

/// Parses a script; never throws on malformed input, the first problem is returned instead.
ParseResult parse(std::string_view source);
/// Like parse but throws DslError.
ScriptAst parse_or_throw(std::string_view source);

}  // namespace hcraft::script
