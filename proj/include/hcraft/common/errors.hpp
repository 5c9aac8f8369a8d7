#pragma once

#include <stdexcept>
#include <string>

namespace hcraft {

/// Bad or inconsistent configuration: unknown task, unknown biome, malformed data file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (stepping a finished episode, negative distance, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hcraft
