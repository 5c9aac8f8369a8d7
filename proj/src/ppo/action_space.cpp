#include "hcraft/ppo/action_space.hpp"

#include <set>
#include <stdexcept>

#include "hcraft/common/errors.hpp"

namespace hcraft::ppo {

ExtendedActionSpace::ExtendedActionSpace(ActionIndices base, std::vector<script::MacroAction> macros)
    : base_(base), macros_(std::move(macros)) {}

ActionIndices ExtendedActionSpace::cardinalities() const {
  ActionIndices c = base_;
  c[env::kDimFunctional] += macro_count();
  return c;
}

std::vector<int> ExtendedActionSpace::head_dims() const {
  const auto c = cardinalities();
  return {c.begin(), c.end()};
}

const script::MacroAction& ExtendedActionSpace::macro_at(int functional_index) const {
  const int k = functional_index - base_functional();
  if (k < 0 || k >= macro_count()) {
    throw std::out_of_range("functional index " + std::to_string(functional_index) + " is not a macro token");
  }
  return macros_[static_cast<std::size_t>(k)];
}

int ExtendedActionSpace::token_of(const std::string& id) const {
  for (int k = 0; k < macro_count(); ++k) {
    if (macros_[static_cast<std::size_t>(k)].id() == id) return base_functional() + k;
  }
  return -1;
}

ExtendedActionSpace build_action_space(const ActionIndices& base, std::vector<script::MacroAction> macros) {
  std::set<std::string> seen;
  for (const auto& m : macros) {
    if (!seen.insert(m.id()).second) throw ConfigError("duplicate macro id '" + m.id() + "'");
  }
  return ExtendedActionSpace(base, std::move(macros));
}

}  // namespace hcraft::ppo
