#pragma once

#include <array>
#include <vector>

#include "hcraft/env/types.hpp"
#include "hcraft/script/interpreter.hpp"

namespace hcraft::ppo {

using ActionIndices = std::array<int, env::kNumActionDims>;

/// Base multi-discrete space with macro tokens appended to the functional dimension.
class ExtendedActionSpace {
 public:
  ExtendedActionSpace() = default;
  ExtendedActionSpace(ActionIndices base, std::vector<script::MacroAction> macros);

  const ActionIndices& base() const { return base_; }
  ActionIndices cardinalities() const;
  std::vector<int> head_dims() const;
  int base_functional() const { return base_[env::kDimFunctional]; }
  int macro_count() const { return static_cast<int>(macros_.size()); }
  const std::vector<script::MacroAction>& macros() const { return macros_; }

  bool is_macro(const ActionIndices& a) const { return a[env::kDimFunctional] >= base_functional(); }
  /// Functional index of a macro token; throws std::out_of_range when not a macro index.
  const script::MacroAction& macro_at(int functional_index) const;
  /// Token index of the macro with this id, or -1.
  int token_of(const std::string& id) const;

 private:
  ActionIndices base_{};
  std::vector<script::MacroAction> macros_;
};

/// Throws ConfigError on duplicate macro ids.
ExtendedActionSpace build_action_space(const ActionIndices& base, std::vector<script::MacroAction> macros);

}  // namespace hcraft::ppo
