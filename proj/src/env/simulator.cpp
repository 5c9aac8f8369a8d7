#include "hcraft/env/simulator.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "hcraft/common/errors.hpp"

namespace hcraft::env {

namespace {

bool has_tool(const Inventory& inv, const HarvestRule& rule) {
  if (rule.required_tool.empty()) return true;
  if (inv.count(rule.required_tool) > 0) return true;
  return std::any_of(rule.alternative_tools.begin(), rule.alternative_tools.end(),
                     [&](const std::string& t) { return inv.count(t) > 0; });
}

}  // namespace

Simulator::Simulator(std::shared_ptr<const Registry> registry, TaskSpec task, EnvOptions options)
    : registry_(std::move(registry)), task_(std::move(task)), options_(options) {
  if (!registry_) throw ConfigError("simulator needs a registry");
  registry_->validate(task_);
  if (options_.num_rays < 1) throw ConfigError("num_rays must be at least 1");
  if (options_.max_range <= 0.0) throw ConfigError("max_range must be positive");
}

std::array<int, kNumActionDims> Simulator::cardinalities() const {
  return {3, 3, 2, kYawBins, kBaseFunctionalCount, static_cast<int>(registry_->recipes().size()),
          kInventorySlots};
}

void Simulator::validate(const MultiDiscreteAction& action) const {
  static constexpr const char* kNames[] = {"move", "strafe", "jump", "yaw_delta",
                                           "functional", "craft_arg", "slot_arg"};
  const auto card = cardinalities();
  const auto values = action.as_array();
  for (int d = 0; d < kNumActionDims; ++d) {
    if (values[d] < 0 || values[d] >= card[d]) {
      throw std::out_of_range(std::string("action component ") + kNames[d] + "=" +
                              std::to_string(values[d]) + " outside [0, " + std::to_string(card[d]) + ")");
    }
  }
}

ResetResult Simulator::reset(std::uint64_t seed) const {
  const auto& biome = registry_->biome(task_.biome);
  WorldState s;
  s.rng_seed = seed;
  s.rng.seed(seed);
  generate(s, biome);
  for (const auto& [item, n] : task_.initial_inventory) {
    if (!s.inventory.add(item, n)) throw ConfigError("initial inventory exceeds 36 slots");
  }
  s.tick = 0;
  s.success = s.inventory.count(task_.target_item) >= task_.target_count;
  s.done = s.success;
  Observation obs = observe(s);
  return {std::move(s), std::move(obs)};
}

void Simulator::generate(WorldState& s, const BiomePreset& biome) const {
  s.width = biome.width;
  s.height = biome.height;
  s.grid.assign(static_cast<std::size_t>(s.width * s.height), Block::kAir);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& cell : s.grid) {
    const double u = unit(s.rng);
    if (u < biome.tree_density) {
      cell = Block::kTree;
    } else if (u < biome.tree_density + biome.stone_density) {
      cell = Block::kStone;
    } else if (u < biome.tree_density + biome.stone_density + biome.water_density) {
      cell = Block::kWater;
    }
  }
  std::uniform_int_distribution<int> xs(0, s.width - 1);
  std::uniform_int_distribution<int> ys(0, s.height - 1);
  auto random_air = [&]() {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      GridPos p{xs(s.rng), ys(s.rng)};
      if (s.at(p) == Block::kAir && !s.mob_at(p) && !(p == s.agent_pos)) return p;
    }
    throw ConfigError("biome " + biome.name + " leaves no free cell");
  };
  auto ensure = [&](Block b, int minimum) {
    int have = static_cast<int>(std::count(s.grid.begin(), s.grid.end(), b));
    for (; have < minimum; ++have) s.grid[s.index(random_air())] = b;
  };
  s.agent_pos = {-1, -1};
  ensure(Block::kTree, biome.min_trees);
  ensure(Block::kStone, biome.min_stones);
  s.agent_pos = random_air();
  s.agent_yaw = static_cast<Heading>(std::uniform_int_distribution<int>(0, 3)(s.rng));
  for (int i = 0; i < biome.cows + biome.sheep; ++i) {
    Mob m;
    m.kind = i < biome.cows ? MobKind::kCow : MobKind::kSheep;
    m.pos = random_air();
    s.mobs.push_back(m);
  }
}

StepResult Simulator::step(WorldState& s, const MultiDiscreteAction& action) const {
  if (s.done) throw ContractViolation("step called on a finished episode");
  validate(action);

  StepResult out;
  ++s.tick;

  s.agent_yaw = rotate(s.agent_yaw, action.yaw_delta - kYawNoop);

  auto try_move = [&](GridPos offset) {
    GridPos next{s.agent_pos.x + offset.x, s.agent_pos.y + offset.y};
    if (s.at(next) != Block::kAir || s.mob_at(next)) {
      out.events.push_back({"blocked", std::string(block_name(s.at(next))), 0});
      return;
    }
    s.agent_pos = next;
  };
  const GridPos fwd = heading_offset(s.agent_yaw);
  if (action.move == 1) try_move(fwd);
  if (action.move == 2) try_move({-fwd.x, -fwd.y});
  if (action.strafe != 0) {
    const GridPos side = heading_offset(rotate(s.agent_yaw, action.strafe == 1 ? -1 : 1));
    try_move(side);
  }

  switch (static_cast<Functional>(action.functional)) {
    case Functional::kNoop: break;
    case Functional::kUse: do_use(s, out.events); break;
    case Functional::kAttack: do_attack(s, out.events); break;
    case Functional::kCraft: do_craft(s, action.craft_arg, out.events); break;
    case Functional::kPlace: do_place(s, action.slot_arg, out.events); break;
    case Functional::kDestroy: do_destroy(s, action.slot_arg, out.events); break;
  }
  // Breaking progress survives only an uninterrupted run of attacks on the same target.
  if (static_cast<Functional>(action.functional) != Functional::kAttack) {
    s.mining_cell = -1;
    s.mining_mob = -1;
    s.mining_hits = 0;
  }

  move_mobs(s);

  s.success = s.inventory.count(task_.target_item) >= task_.target_count;
  if (s.success) out.events.push_back({"success", task_.target_item, s.inventory.count(task_.target_item)});
  s.done = s.success || s.tick >= static_cast<std::uint64_t>(task_.max_steps);
  out.done = s.done;
  out.observation = observe(s);
  return out;
}

void Simulator::do_attack(WorldState& s, std::vector<Event>& events) const {
  const GridPos off = heading_offset(s.agent_yaw);
  const GridPos front{s.agent_pos.x + off.x, s.agent_pos.y + off.y};
  if (auto mi = s.mob_at(front)) {
    auto& mob = s.mobs[*mi];
    const auto rule = registry_->rule_for_source(mob_name(mob.kind), false);
    s.mining_cell = -1;
    if (s.mining_mob != static_cast<int>(*mi)) {
      s.mining_mob = static_cast<int>(*mi);
      s.mining_hits = 0;
    }
    const int damage = s.inventory.count("diamond_sword") > 0 ? 3 : 1;
    mob.health -= damage;
    events.push_back({"hit", std::string(mob_name(mob.kind)), damage});
    if (mob.health <= 0) {
      mob.alive = false;
      s.mining_mob = -1;
      if (rule && s.inventory.add(rule->item, 1)) events.push_back({"harvest", rule->item, 1});
    }
    return;
  }
  s.mining_mob = -1;
  const Block b = s.at(front);
  const auto rule = registry_->rule_for_source(block_name(b), false);
  if (!s.in_bounds(front) || !rule || !has_tool(s.inventory, *rule)) {
    s.mining_cell = -1;
    s.mining_hits = 0;
    events.push_back({"attack_no_effect", std::string(block_name(b)), 0});
    return;
  }
  const int idx = static_cast<int>(s.index(front));
  if (s.mining_cell != idx) {
    s.mining_cell = idx;
    s.mining_hits = 0;
  }
  ++s.mining_hits;
  events.push_back({"hit", std::string(block_name(b)), s.mining_hits});
  if (s.mining_hits >= rule->hits) {
    s.grid[s.index(front)] = Block::kAir;
    s.mining_cell = -1;
    s.mining_hits = 0;
    if (s.inventory.add(rule->item, 1)) {
      events.push_back({"harvest", rule->item, 1});
    } else {
      events.push_back({"inventory_full", rule->item, 1});
    }
  }
}

void Simulator::do_use(WorldState& s, std::vector<Event>& events) const {
  const GridPos off = heading_offset(s.agent_yaw);
  const GridPos front{s.agent_pos.x + off.x, s.agent_pos.y + off.y};
  auto mi = s.mob_at(front);
  if (!mi) {
    events.push_back({"use_no_effect", std::string(block_name(s.at(front))), 0});
    return;
  }
  auto& mob = s.mobs[*mi];
  const auto rule = registry_->rule_for_source(mob_name(mob.kind), true);
  if (!rule || !has_tool(s.inventory, *rule)) {
    events.push_back({"use_no_effect", std::string(mob_name(mob.kind)), 0});
    return;
  }
  bool& spent = mob.kind == MobKind::kSheep ? mob.sheared : mob.milked;
  if (mob.kind == MobKind::kSheep && spent) {
    events.push_back({"use_no_effect", std::string(mob_name(mob.kind)), 0});
    return;
  }
  if (!rule->consumes.empty() && !s.inventory.remove(rule->consumes, 1)) return;
  if (!s.inventory.add(rule->item, 1)) {
    if (!rule->consumes.empty()) s.inventory.add(rule->consumes, 1);
    events.push_back({"inventory_full", rule->item, 1});
    return;
  }
  spent = true;
  events.push_back({"harvest", rule->item, 1});
}

bool Simulator::table_nearby(const WorldState& s) const {
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (s.at({s.agent_pos.x + dx, s.agent_pos.y + dy}) == Block::kCraftingTable) return true;
    }
  }
  return false;
}

void Simulator::do_craft(WorldState& s, int recipe_index, std::vector<Event>& events) const {
  const auto& recipe = registry_->recipes().at(static_cast<std::size_t>(recipe_index));
  if (recipe.needs_table && !table_nearby(s)) {
    events.push_back({"craft_failed", recipe.output, 0});
    return;
  }
  for (const auto& [item, n] : recipe.inputs) {
    if (s.inventory.count(item) < n) {
      events.push_back({"craft_failed", recipe.output, 0});
      return;
    }
  }
  Inventory trial = s.inventory;
  for (const auto& [item, n] : recipe.inputs) trial.remove(item, n);
  if (!trial.add(recipe.output, recipe.output_count)) {
    events.push_back({"inventory_full", recipe.output, recipe.output_count});
    return;
  }
  s.inventory = std::move(trial);
  events.push_back({"craft", recipe.output, recipe.output_count});
}

void Simulator::do_place(WorldState& s, int slot, std::vector<Event>& events) const {
  const auto& entry = s.inventory.slot(slot);
  const GridPos off = heading_offset(s.agent_yaw);
  const GridPos front{s.agent_pos.x + off.x, s.agent_pos.y + off.y};
  const auto placeable = registry_->placeable();
  const bool can_place = entry.count > 0 &&
                         std::find(placeable.begin(), placeable.end(), entry.item) != placeable.end() &&
                         s.in_bounds(front) && s.at(front) == Block::kAir && !s.mob_at(front);
  if (!can_place) {
    events.push_back({"place_failed", entry.item, 0});
    return;
  }
  const auto block = block_from_name(entry.item);
  if (!block) {
    events.push_back({"place_failed", entry.item, 0});
    return;
  }
  const std::string item = entry.item;
  s.inventory.remove(item, 1);
  s.grid[s.index(front)] = *block;
  events.push_back({"place", item, 1});
}

void Simulator::do_destroy(WorldState& s, int slot, std::vector<Event>& events) const {
  const auto entry = s.inventory.slot(slot);
  if (entry.count == 0) {
    events.push_back({"destroy_failed", "", 0});
    return;
  }
  s.inventory.remove(entry.item, 1);
  events.push_back({"destroy", entry.item, 1});
}

void Simulator::move_mobs(WorldState& s) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> dir(0, 3);
  for (auto& mob : s.mobs) {
    if (!mob.alive) continue;
    if (unit(s.rng) >= options_.mob_move_prob) continue;
    const GridPos off = heading_offset(static_cast<Heading>(dir(s.rng)));
    const GridPos next{mob.pos.x + off.x, mob.pos.y + off.y};
    if (s.at(next) == Block::kAir && !s.mob_at(next) && !(next == s.agent_pos)) mob.pos = next;
  }
}

Observation Simulator::observe(const WorldState& s) const {
  Observation obs;
  obs.rays = ray_cast(s, options_);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      obs.voxels[static_cast<std::size_t>(dy + 1)][static_cast<std::size_t>(dx + 1)] =
          std::string(block_name(s.at({s.agent_pos.x + dx, s.agent_pos.y + dy})));
    }
  }
  obs.inventory_names = s.inventory.names();
  for (int i = 0; i < kInventorySlots; ++i) obs.inventory_counts[static_cast<std::size_t>(i)] = s.inventory.slot(i).count;
  obs.pos = s.agent_pos;
  obs.yaw = s.agent_yaw;
  obs.tick = s.tick;
  return obs;
}

std::string snapshot_record(const WorldState& s) {
  std::ostringstream os;
  os << "tick=" << s.tick << " seed=" << s.rng_seed << " size=" << s.width << "x" << s.height
     << " agent=" << s.agent_pos.x << "," << s.agent_pos.y << " yaw=" << static_cast<int>(s.agent_yaw)
     << " grid=";
  static constexpr char kGlyph[] = {'.', 'T', 'S', '~', 'C', '#'};
  for (int y = 0; y < s.height; ++y) {
    if (y > 0) os << '/';
    for (int x = 0; x < s.width; ++x) {
      GridPos p{x, y};
      if (p == s.agent_pos) {
        os << 'A';
      } else if (auto m = s.mob_at(p)) {
        os << (s.mobs[*m].kind == MobKind::kCow ? 'c' : 's');
      } else {
        os << kGlyph[static_cast<int>(s.at(p))];
      }
    }
  }
  os << " inventory=";
  bool first = true;
  for (const auto& [item, n] : s.inventory.as_map()) {
    os << (first ? "" : ",") << item << ":" << n;
    first = false;
  }
  os << " done=" << s.done << " success=" << s.success;
  return os.str();
}

Env::Env(std::shared_ptr<const Registry> registry, TaskSpec task, EnvOptions options)
    : sim_(std::move(registry), std::move(task), options) {}

const Observation& Env::reset(std::uint64_t seed) {
  auto r = sim_.reset(seed);
  state_ = std::move(r.state);
  obs_ = std::move(r.observation);
  return obs_;
}

const Observation& Env::refresh() {
  obs_ = sim_.observe(state_);
  return obs_;
}

const StepResult& Env::step(const MultiDiscreteAction& action) {
  last_ = sim_.step(state_, action);
  obs_ = last_.observation;
  return last_;
}

}  // namespace hcraft::env
