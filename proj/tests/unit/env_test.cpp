#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hcraft/common/errors.hpp"
#include "hcraft/env/simulator.hpp"

using namespace hcraft::env;

namespace {

std::shared_ptr<const Registry> registry() {
  static auto reg = std::make_shared<const Registry>(Registry::load(HCRAFT_DATA_DIR "/minicraft.jsonl"));
  return reg;
}

Simulator sim_for(const std::string& task) { return Simulator(registry(), registry()->task(task)); }

/// HarvestLog world with every block and mob removed.
WorldState empty_world(const Simulator& sim, GridPos agent, Heading yaw) {
  auto s = sim.reset(1).state;
  std::fill(s.grid.begin(), s.grid.end(), Block::kAir);
  s.mobs.clear();
  s.agent_pos = agent;
  s.agent_yaw = yaw;
  return s;
}

MultiDiscreteAction functional(Functional f, int craft = 0, int slot = 0) {
  MultiDiscreteAction a;
  a.functional = static_cast<int>(f);
  a.craft_arg = craft;
  a.slot_arg = slot;
  return a;
}

// Independent ray oracle: test every in-range cell against the ray with the slab method and keep
// the solid cell with the smallest entry parameter.
Ray oracle_ray(const WorldState& s, double dx, double dy, const EnvOptions& opt) {
  const double ox = s.agent_pos.x + 0.5, oy = s.agent_pos.y + 0.5;
  double best_block_t = kInfinity, best_entity_t = kInfinity;
  Ray out;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (x == s.agent_pos.x && y == s.agent_pos.y) continue;
      double t0 = -kInfinity, t1 = kInfinity;
      auto slab = [&](double o, double d, double lo, double hi) {
        if (d == 0.0) {
          if (o <= lo || o >= hi) t0 = kInfinity;
          return;
        }
        double a = (lo - o) / d, b = (hi - o) / d;
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
      };
      slab(ox, dx, x, x + 1);
      slab(oy, dy, y, y + 1);
      if (!(t0 < t1) || t0 < 0 || t0 > opt.max_range) continue;
      const double dist = std::hypot(x - s.agent_pos.x, y - s.agent_pos.y);
      const Block b = s.at({x, y});
      if (is_solid(b) && t0 < best_block_t) {
        best_block_t = t0;
        out.block_name = std::string(block_name(b));
        out.block_distance = dist;
      }
      if (auto m = s.mob_at({x, y}); m && t0 < best_entity_t) {
        best_entity_t = t0;
        out.entity_name = std::string(mob_name(s.mobs[*m].kind));
        out.entity_distance = dist;
      }
    }
  }
  if (best_entity_t > best_block_t) {
    out.entity_name = "none";
    out.entity_distance = kInfinity;
  }
  return out;
}

}  // namespace

TEST(Registry, UnknownTaskAndBiomeAreConfigErrors) {
  EXPECT_THROW(registry()->task("NoSuchTask"), hcraft::ConfigError);
  auto task = registry()->task("HarvestLog");
  task.biome = "moon";
  EXPECT_THROW(Simulator(registry(), task), hcraft::ConfigError);
}

TEST(Registry, RecipeLookups) {
  ASSERT_TRUE(registry()->recipe("wooden_pickaxe"));
  EXPECT_TRUE(registry()->recipe("wooden_pickaxe")->needs_table);
  ASSERT_TRUE(registry()->recipe("bucket"));
  EXPECT_FALSE(registry()->recipe("bucket")->needs_table);
  EXPECT_FALSE(registry()->recipe("diamond_hoe"));
  for (const char* item : {"planks", "stick", "crafting_table", "wooden_pickaxe", "stone_pickaxe",
                           "bucket", "shears", "bed", "furnace"}) {
    EXPECT_TRUE(registry()->recipe(item)) << item;
  }
}

TEST(Registry, MalformedLineReportsLineNumber) {
  try {
    Registry::parse("{\"kind\":\"item\",\"name\":\"a\"}\n{broken");
    FAIL();
  } catch (const hcraft::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Reset, SameSeedSameObservation) {
  auto sim = sim_for("HarvestLog");
  auto a = sim.reset(7);
  auto b = sim.reset(7);
  EXPECT_EQ(a.observation, b.observation);
  EXPECT_EQ(a.state, b.state);
  EXPECT_EQ(a.state.tick, 0u);
}

TEST(Reset, DifferentSeedsDifferentTrees) {
  auto sim = sim_for("HarvestLog");
  EXPECT_NE(sim.reset(7).state.grid, sim.reset(8).state.grid);
}

TEST(Reset, InitialInventoryFromPreset) {
  auto sim = sim_for("StonePickaxe");
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    EXPECT_EQ(sim.reset(seed).state.inventory.count("wooden_pickaxe"), 1);
  }
}

TEST(Step, NoopKeepsPositionAndAdvancesTick) {
  auto sim = sim_for("HarvestLog");
  auto s = sim.reset(3).state;
  const auto pos = s.agent_pos;
  sim.step(s, MultiDiscreteAction{});
  EXPECT_EQ(s.agent_pos, pos);
  EXPECT_EQ(s.tick, 1u);
}

TEST(Step, TwentyConsecutiveAttacksHarvestLog) {
  auto sim = sim_for("HarvestLog");
  auto s = empty_world(sim, {2, 2}, Heading::kEast);
  s.grid[s.index({3, 2})] = Block::kTree;
  for (int i = 0; i < 19; ++i) {
    sim.step(s, functional(Functional::kAttack));
    ASSERT_EQ(s.inventory.count("log"), 0);
  }
  auto r = sim.step(s, functional(Functional::kAttack));
  EXPECT_EQ(s.inventory.count("log"), 1);
  EXPECT_EQ(s.at({3, 2}), Block::kAir);
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(s.success);
}

TEST(Step, InterruptedAttackResetsProgress) {
  auto sim = sim_for("HarvestLog");
  auto s = empty_world(sim, {2, 2}, Heading::kEast);
  s.grid[s.index({3, 2})] = Block::kTree;
  for (int i = 0; i < 19; ++i) sim.step(s, functional(Functional::kAttack));
  sim.step(s, MultiDiscreteAction{});
  for (int i = 0; i < 19; ++i) sim.step(s, functional(Functional::kAttack));
  EXPECT_EQ(s.inventory.count("log"), 0);
  sim.step(s, functional(Functional::kAttack));
  EXPECT_EQ(s.inventory.count("log"), 1);
}

TEST(Step, StoneNeedsPickaxe) {
  auto sim = sim_for("StonePickaxe");
  auto s = empty_world(sim, {2, 2}, Heading::kEast);
  s.grid[s.index({3, 2})] = Block::kStone;
  s.inventory.remove("wooden_pickaxe", 1);
  for (int i = 0; i < 30; ++i) sim.step(s, functional(Functional::kAttack));
  EXPECT_EQ(s.inventory.count("cobblestone"), 0);
  s.inventory.add("wooden_pickaxe", 1);
  for (int i = 0; i < 30; ++i) sim.step(s, functional(Functional::kAttack));
  EXPECT_EQ(s.inventory.count("cobblestone"), 1);
}

TEST(Step, CraftPlanksFollowsRecipeRecord) {
  auto sim = sim_for("Stick");
  auto s = empty_world(sim, {2, 2}, Heading::kEast);
  s.inventory.add("log", 1);
  const auto recipe = *registry()->recipe("planks");
  ASSERT_EQ(recipe.inputs.size(), 1u);
  const int idx = *registry()->recipe_index("planks");
  sim.step(s, functional(Functional::kCraft, idx));
  EXPECT_EQ(s.inventory.count("log"), 1 - recipe.inputs[0].second);
  EXPECT_EQ(s.inventory.count("planks"), recipe.output_count);
  EXPECT_EQ(s.inventory.count("planks"), 4);
}

TEST(Step, TableRecipeNeedsNearbyTable) {
  auto sim = sim_for("Furnace");
  auto s = empty_world(sim, {2, 2}, Heading::kEast);
  s.inventory.add("planks", 3);
  s.inventory.add("stick", 2);
  const int idx = *registry()->recipe_index("wooden_pickaxe");
  auto r = sim.step(s, functional(Functional::kCraft, idx));
  EXPECT_EQ(s.inventory.count("wooden_pickaxe"), 0);
  EXPECT_EQ(r.events.front().kind, "craft_failed");
  s.inventory.add("crafting_table", 1);
  sim.step(s, functional(Functional::kPlace, 0, *s.inventory.slot_of("crafting_table")));
  EXPECT_EQ(s.at({3, 2}), Block::kCraftingTable);
  sim.step(s, functional(Functional::kCraft, idx));
  EXPECT_EQ(s.inventory.count("wooden_pickaxe"), 1);
  // Recycle the table.
  for (int i = 0; i < 3; ++i) sim.step(s, functional(Functional::kAttack));
  EXPECT_EQ(s.inventory.count("crafting_table"), 1);
}

TEST(Step, BucketOnCowGivesMilk) {
  auto sim = sim_for("MilkBucket");
  auto s = empty_world(sim, {2, 2}, Heading::kEast);
  s.mobs.push_back(Mob{MobKind::kCow, {3, 2}});
  sim.step(s, functional(Functional::kCraft, *registry()->recipe_index("bucket")));
  ASSERT_EQ(s.inventory.count("bucket"), 1);
  // Mobs wander; keep it pinned for the test.
  s.mobs[0].pos = {3, 2};
  sim.step(s, functional(Functional::kUse));
  EXPECT_EQ(s.inventory.count("milk_bucket"), 1);
  EXPECT_EQ(s.inventory.count("bucket"), 0);
}

TEST(Step, MovementBlockedBySolidCells) {
  auto sim = sim_for("HarvestLog");
  auto s = empty_world(sim, {2, 2}, Heading::kEast);
  s.grid[s.index({3, 2})] = Block::kStone;
  MultiDiscreteAction fwd;
  fwd.move = 1;
  sim.step(s, fwd);
  EXPECT_EQ(s.agent_pos, (GridPos{2, 2}));
  s.grid[s.index({3, 2})] = Block::kAir;
  sim.step(s, fwd);
  EXPECT_EQ(s.agent_pos, (GridPos{3, 2}));
}

TEST(Step, StepAfterDoneIsContractViolation) {
  auto task = registry()->task("HarvestLog");
  task.max_steps = 2;
  Simulator sim(registry(), task);
  auto s = sim.reset(5).state;
  sim.step(s, {});
  auto r = sim.step(s, {});
  EXPECT_TRUE(r.done);
  EXPECT_THROW(sim.step(s, {}), hcraft::ContractViolation);
}

TEST(Step, OutOfRangeComponentsRejected) {
  auto sim = sim_for("HarvestLog");
  auto s = sim.reset(1).state;
  const auto card = sim.cardinalities();
  EXPECT_EQ(card[0], 3);
  EXPECT_EQ(card[3], 8);
  EXPECT_EQ(card[4], 6);
  EXPECT_EQ(card[6], 36);
  for (int d = 0; d < kNumActionDims; ++d) {
    for (int bad : {-1, card[d]}) {
      auto a = MultiDiscreteAction{}.as_array();
      a[d] = bad;
      auto copy = s;
      EXPECT_THROW(sim.step(copy, MultiDiscreteAction::from_array(a)), std::out_of_range) << d;
      EXPECT_EQ(copy.tick, 0u);
    }
  }
}

TEST(Step, RandomValidActionsAcceptedAndInvariantsHold) {
  auto sim = sim_for("MilkBucket");
  std::mt19937_64 rng(11);
  const auto card = sim.cardinalities();
  for (int episode = 0; episode < 20; ++episode) {
    auto s = sim.reset(rng()).state;
    std::uint64_t tick = 0;
    while (!s.done) {
      std::array<int, kNumActionDims> a{};
      for (int d = 0; d < kNumActionDims; ++d) a[d] = std::uniform_int_distribution<int>(0, card[d] - 1)(rng);
      ASSERT_NO_THROW(sim.step(s, MultiDiscreteAction::from_array(a)));
      ASSERT_EQ(s.tick, ++tick);
      ASSERT_TRUE(s.in_bounds(s.agent_pos));
      for (int i = 0; i < kInventorySlots; ++i) ASSERT_GE(s.inventory.slot(i).count, 0);
    }
  }
}

TEST(Step, ReplayIsBitIdentical) {
  auto sim = sim_for("Mutton");
  std::mt19937_64 rng(5);
  const auto card = sim.cardinalities();
  std::vector<MultiDiscreteAction> actions;
  for (int i = 0; i < 150; ++i) {
    std::array<int, kNumActionDims> a{};
    for (int d = 0; d < kNumActionDims; ++d) a[d] = std::uniform_int_distribution<int>(0, card[d] - 1)(rng);
    actions.push_back(MultiDiscreteAction::from_array(a));
  }
  auto run = [&]() {
    auto s = sim.reset(42).state;
    std::vector<StepResult> results;
    for (const auto& a : actions) {
      if (s.done) break;
      results.push_back(sim.step(s, a));
    }
    return std::make_pair(s, results);
  };
  auto [s1, r1] = run();
  auto [s2, r2] = run();
  EXPECT_EQ(s1, s2);
  ASSERT_EQ(r1.size(), r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_EQ(r1[i].observation, r2[i].observation);
    EXPECT_EQ(r1[i].events, r2[i].events);
  }
}

TEST(Step, ConservationOfCraftingAndHarvest) {
  auto task = registry()->task("StonePickaxe");
  task.max_steps = 3000;
  Simulator sim(registry(), task);
  std::mt19937_64 rng(17);
  const auto card = sim.cardinalities();
  for (int episode = 0; episode < 5; ++episode) {
    auto s = sim.reset(rng()).state;
    s.inventory.add("log", 6);
    s.inventory.add("crafting_table", 1);
    auto solid_count = [](const WorldState& w) {
      return std::count_if(w.grid.begin(), w.grid.end(), [](Block b) { return b == Block::kTree || b == Block::kStone; });
    };
    const auto blocks_before = solid_count(s);
    int harvested_from_blocks = 0;
    while (!s.done) {
      std::array<int, kNumActionDims> a{};
      for (int d = 0; d < kNumActionDims; ++d) a[d] = std::uniform_int_distribution<int>(0, card[d] - 1)(rng);
      // Bias towards attacking so blocks actually break.
      if (rng() % 4 != 0) a[kDimFunctional] = static_cast<int>(Functional::kAttack), a[kDimYaw] = kYawNoop, a[kDimMove] = 0, a[kDimStrafe] = 0;
      const auto before = s.inventory.as_map();
      auto r = sim.step(s, MultiDiscreteAction::from_array(a));
      auto after = s.inventory.as_map();
      for (const auto& ev : r.events) {
        if (ev.kind == "craft") {
          const auto recipe = *registry()->recipe(ev.item);
          auto expected = before;
          for (const auto& [item, n] : recipe.inputs) expected[item] -= n;
          expected[recipe.output] += recipe.output_count;
          std::erase_if(expected, [](const auto& kv) { return kv.second == 0; });
          EXPECT_EQ(after, expected);
        }
        if (ev.kind == "harvest" && (ev.item == "log" || ev.item == "cobblestone")) ++harvested_from_blocks;
      }
    }
    EXPECT_EQ(blocks_before - solid_count(s), harvested_from_blocks);
  }
}

TEST(RayCast, TreeThreeAheadOnCentreRay) {
  auto sim = sim_for("HarvestLog");
  auto s = empty_world(sim, {1, 4}, Heading::kEast);
  s.grid[s.index({4, 4})] = Block::kTree;
  auto obs = sim.observe(s);
  EXPECT_EQ(obs.center_ray().block_name, "tree");
  EXPECT_DOUBLE_EQ(obs.center_ray().block_distance, 3.0);
}

TEST(RayCast, AdjacentTreeAtDistanceOne) {
  auto sim = sim_for("HarvestLog");
  auto s = empty_world(sim, {5, 5}, Heading::kNorth);
  s.grid[s.index({5, 4})] = Block::kTree;
  EXPECT_DOUBLE_EQ(sim.observe(s).center_ray().block_distance, 1.0);
}

TEST(RayCast, EmptyWorldSeesNothing) {
  auto sim = sim_for("HarvestLog");
  for (auto h : {Heading::kNorth, Heading::kEast, Heading::kSouth, Heading::kWest}) {
    auto s = empty_world(sim, {5, 5}, h);
    for (const auto& r : sim.observe(s).rays) {
      EXPECT_EQ(r.block_name, "air");
      EXPECT_TRUE(std::isinf(r.block_distance));
    }
  }
}

TEST(RayCast, MatchesBruteForceOracleOnRandomStates) {
  EnvOptions opt;
  auto task = registry()->task("MilkBucket");
  Simulator sim(registry(), task, opt);
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    auto s = sim.reset(rng()).state;
    std::uniform_real_distribution<double> unit(0, 1);
    const double density = unit(rng) * 0.4;
    for (auto& b : s.grid) {
      if (unit(rng) < density) b = static_cast<Block>(1 + rng() % 4);
    }
    s.grid[s.index(s.agent_pos)] = Block::kAir;
    s.agent_yaw = static_cast<Heading>(rng() % 4);
    const auto rays = ray_cast(s, opt);
    ASSERT_EQ(static_cast<int>(rays.size()), opt.num_rays);
    for (int i = 0; i < opt.num_rays; ++i) {
      const auto [dx, dy] = ray_direction(s.agent_yaw, i, opt);
      const auto expected = oracle_ray(s, dx, dy, opt);
      ASSERT_EQ(rays[static_cast<std::size_t>(i)], expected) << "trial " << trial << " ray " << i << "\n"
                                                            << snapshot_record(s);
    }
  }
}

TEST(Observation, VoxelsAndInventoryNames) {
  auto sim = sim_for("StonePickaxe");
  auto s = empty_world(sim, {0, 0}, Heading::kSouth);
  s.grid[s.index({1, 0})] = Block::kStone;
  auto obs = sim.observe(s);
  EXPECT_EQ(obs.voxels[0][0], "bedrock");
  EXPECT_EQ(obs.voxels[1][2], "stone");
  EXPECT_EQ(obs.voxels[1][1], "air");
  EXPECT_EQ(obs.inventory_names[0], "wooden_pickaxe");
  EXPECT_EQ(obs.inventory_names[35], "air");
  EXPECT_EQ(obs.count("wooden_pickaxe"), 1);
}

TEST(Snapshot, SingleLineRecord) {
  auto sim = sim_for("HarvestLog");
  const auto line = snapshot_record(sim.reset(7).state);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_NE(line.find("seed=7"), std::string::npos);
  EXPECT_EQ(line, snapshot_record(sim.reset(7).state));
}
