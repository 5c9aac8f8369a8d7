#include "hcraft/env/types.hpp"

#include <algorithm>

namespace hcraft::env {

std::string_view block_name(Block b) {
  switch (b) {
    case Block::kAir: return "air";
    case Block::kTree: return "tree";
    case Block::kStone: return "stone";
    case Block::kWater: return "water";
    case Block::kCraftingTable: return "crafting_table";
    case Block::kBedrock: return "bedrock";
  }
  return "air";
}

std::optional<Block> block_from_name(std::string_view name) {
  for (auto b : {Block::kAir, Block::kTree, Block::kStone, Block::kWater, Block::kCraftingTable,
                 Block::kBedrock}) {
    if (block_name(b) == name) return b;
  }
  return std::nullopt;
}

bool is_solid(Block b) { return b != Block::kAir; }

std::string_view mob_name(MobKind m) { return m == MobKind::kCow ? "cow" : "sheep"; }

GridPos heading_offset(Heading h) {
  switch (h) {
    case Heading::kNorth: return {0, -1};
    case Heading::kEast: return {1, 0};
    case Heading::kSouth: return {0, 1};
    case Heading::kWest: return {-1, 0};
  }
  return {0, 0};
}

Heading rotate(Heading h, int quarter_turns) {
  const int v = ((static_cast<int>(h) + quarter_turns) % 4 + 4) % 4;
  return static_cast<Heading>(v);
}

int Inventory::count(std::string_view item) const {
  for (const auto& s : slots_) {
    if (s.count > 0 && s.item == item) return s.count;
  }
  return 0;
}

std::optional<int> Inventory::slot_of(std::string_view item) const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].count > 0 && slots_[i].item == item) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool Inventory::add(std::string_view item, int n) {
  if (n <= 0) return n == 0;
  if (auto idx = slot_of(item)) {
    slots_[static_cast<std::size_t>(*idx)].count += n;
    return true;
  }
  for (auto& s : slots_) {
    if (s.count == 0) {
      s.item = std::string(item);
      s.count = n;
      return true;
    }
  }
  return false;
}

bool Inventory::remove(std::string_view item, int n) {
  auto idx = slot_of(item);
  if (!idx) return n == 0;
  auto& s = slots_[static_cast<std::size_t>(*idx)];
  if (s.count < n) return false;
  s.count -= n;
  if (s.count == 0) s.item.clear();
  return true;
}

std::array<std::string, kInventorySlots> Inventory::names() const {
  std::array<std::string, kInventorySlots> out;
  for (std::size_t i = 0; i < slots_.size(); ++i) out[i] = slots_[i].count > 0 ? slots_[i].item : "air";
  return out;
}

std::map<std::string, int> Inventory::as_map() const {
  std::map<std::string, int> out;
  for (const auto& s : slots_) {
    if (s.count > 0) out[s.item] += s.count;
  }
  return out;
}

int Inventory::used_slots() const {
  return static_cast<int>(std::count_if(slots_.begin(), slots_.end(), [](const Slot& s) { return s.count > 0; }));
}

std::optional<std::size_t> WorldState::mob_at(GridPos p) const {
  for (std::size_t i = 0; i < mobs.size(); ++i) {
    if (mobs[i].alive && mobs[i].pos == p) return i;
  }
  return std::nullopt;
}

int Observation::count(std::string_view item) const {
  for (std::size_t i = 0; i < inventory_names.size(); ++i) {
    if (inventory_names[i] == item) return inventory_counts[i];
  }
  return 0;
}

double Observation::nearest(std::string_view name) const {
  double best = kInfinity;
  for (const auto& r : rays) {
    if (r.block_name == name) best = std::min(best, r.block_distance);
    if (r.entity_name == name) best = std::min(best, r.entity_distance);
  }
  return best;
}

}  // namespace hcraft::env
