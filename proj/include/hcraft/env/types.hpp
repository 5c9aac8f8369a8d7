#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace hcraft::env {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr int kInventorySlots = 36;

enum class Block : std::uint8_t { kAir, kTree, kStone, kWater, kCraftingTable, kBedrock };

std::string_view block_name(Block b);
std::optional<Block> block_from_name(std::string_view name);
bool is_solid(Block b);

enum class MobKind : std::uint8_t { kCow, kSheep };

std::string_view mob_name(MobKind m);

/// Four compass headings; north is -y.
enum class Heading : std::uint8_t { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

struct GridPos {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

GridPos heading_offset(Heading h);
Heading rotate(Heading h, int quarter_turns);

struct Mob {
  MobKind kind = MobKind::kCow;
  GridPos pos;
  int health = 3;
  bool sheared = false;
  bool milked = false;
  bool alive = true;
  friend bool operator==(const Mob&, const Mob&) = default;
};

/// Fixed 36-slot inventory. Each distinct item owns one slot; counts are unbounded per slot.
class Inventory {
 public:
  struct Slot {
    std::string item;  // empty when unused
    int count = 0;
    friend bool operator==(const Slot&, const Slot&) = default;
  };

  int count(std::string_view item) const;
  /// False when the item needs a fresh slot and none is free.
  bool add(std::string_view item, int n);
  /// False (and no change) when fewer than n are held.
  bool remove(std::string_view item, int n);
  std::optional<int> slot_of(std::string_view item) const;
  const Slot& slot(int index) const { return slots_.at(static_cast<std::size_t>(index)); }
  /// Slot names as the agent sees them; empty slots read "air".
  std::array<std::string, kInventorySlots> names() const;
  std::map<std::string, int> as_map() const;
  int used_slots() const;

  friend bool operator==(const Inventory&, const Inventory&) = default;

 private:
  std::array<Slot, kInventorySlots> slots_{};
};

/// Full simulator state. Copyable; the RNG travels with the state so replays are exact.
struct WorldState {
  int width = 0;
  int height = 0;
  std::vector<Block> grid;  // row-major, index = y * width + x
  GridPos agent_pos;
  Heading agent_yaw = Heading::kNorth;
  Inventory inventory;
  std::vector<Mob> mobs;
  std::uint64_t tick = 0;
  std::uint64_t rng_seed = 0;
  std::mt19937_64 rng;
  int mining_cell = -1;  // cell index under consecutive attack, -1 when none
  int mining_hits = 0;
  int mining_mob = -1;  // mob index under attack
  bool done = false;
  bool success = false;

  bool in_bounds(GridPos p) const { return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height; }
  std::size_t index(GridPos p) const {
    return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(p.x);
  }
  /// Out-of-bounds cells read as bedrock.
  Block at(GridPos p) const { return in_bounds(p) ? grid[index(p)] : Block::kBedrock; }
  std::optional<std::size_t> mob_at(GridPos p) const;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct Ray {
  std::string block_name = "air";
  double block_distance = kInfinity;
  std::string entity_name = "none";
  double entity_distance = kInfinity;
  friend bool operator==(const Ray&, const Ray&) = default;
};

struct Observation {
  std::vector<Ray> rays;
  std::array<std::array<std::string, 3>, 3> voxels;  // [dy+1][dx+1], world aligned
  std::array<std::string, kInventorySlots> inventory_names;
  std::array<int, kInventorySlots> inventory_counts{};
  GridPos pos;
  Heading yaw = Heading::kNorth;
  std::uint64_t tick = 0;

  int count(std::string_view item) const;
  /// Least ray distance to a block or entity with this name; infinity when not seen.
  double nearest(std::string_view name) const;
  /// Name and distance reported by the centre ray.
  const Ray& center_ray() const { return rays.at(rays.size() / 2); }

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Functional action indices; macro tokens are appended after kDestroy by the trainer.
enum class Functional : int { kNoop = 0, kUse = 1, kAttack = 2, kCraft = 3, kPlace = 4, kDestroy = 5 };
inline constexpr int kBaseFunctionalCount = 6;

/// Index layout of the seven action dimensions.
enum ActionDim : int {
  kDimMove = 0,
  kDimStrafe = 1,
  kDimJump = 2,
  kDimYaw = 3,
  kDimFunctional = 4,
  kDimCraftArg = 5,
  kDimSlotArg = 6,
  kNumActionDims = 7
};

inline constexpr int kYawBins = 8;
inline constexpr int kYawNoop = 4;  // bin k turns by (k - 4) quarter turns

struct MultiDiscreteAction {
  int move = 0;       // 0 noop, 1 forward, 2 back
  int strafe = 0;     // 0 noop, 1 left, 2 right
  int jump = 0;       // 0 noop, 1 jump
  int yaw_delta = kYawNoop;
  int functional = 0;
  int craft_arg = 0;
  int slot_arg = 0;

  std::array<int, kNumActionDims> as_array() const {
    return {move, strafe, jump, yaw_delta, functional, craft_arg, slot_arg};
  }
  static MultiDiscreteAction from_array(const std::array<int, kNumActionDims>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
  }
  friend bool operator==(const MultiDiscreteAction&, const MultiDiscreteAction&) = default;
};

struct TaskSpec {
  std::string task_id;
  std::string target_item;
  int target_count = 1;
  int max_steps = 200;
  std::map<std::string, int> initial_inventory;
  std::string biome;
  std::string prompt;  // natural-language descriptor used by the similarity reward
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

}  // namespace hcraft::env
