#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hcraft/env/registry.hpp"
#include "hcraft/env/types.hpp"

namespace hcraft::env {

struct EnvOptions {
  int num_rays = 5;
  double fan_degrees = 80.0;  // angular span of the ray fan, centred on the heading
  double max_range = 8.0;
  double mob_move_prob = 0.2;
};

/// Something observable that happened during a step.
struct Event {
  std::string kind;    // "harvest", "craft", "craft_failed", "place", "use", "blocked", ...
  std::string item;    // item involved, if any
  int count = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

struct ResetResult {
  WorldState state;
  Observation observation;
};

struct StepResult {
  Observation observation;
  bool done = false;
  std::vector<Event> events;
};

/// Pure transition function over WorldState: holds only immutable configuration.
/// A single Simulator may be shared across threads; each WorldState belongs to one caller.
class Simulator {
 public:
  Simulator(std::shared_ptr<const Registry> registry, TaskSpec task, EnvOptions options = {});

  ResetResult reset(std::uint64_t seed) const;
  StepResult step(WorldState& state, const MultiDiscreteAction& action) const;
  Observation observe(const WorldState& state) const;

  /// Cardinalities [move, strafe, jump, yaw, functional, craft_arg, slot_arg].
  std::array<int, kNumActionDims> cardinalities() const;
  /// Throws std::out_of_range naming the offending dimension.
  void validate(const MultiDiscreteAction& action) const;

  const TaskSpec& task() const { return task_; }
  const Registry& registry() const { return *registry_; }
  const EnvOptions& options() const { return options_; }

 private:
  void generate(WorldState& s, const BiomePreset& biome) const;
  void do_attack(WorldState& s, std::vector<Event>& events) const;
  void do_use(WorldState& s, std::vector<Event>& events) const;
  void do_craft(WorldState& s, int recipe, std::vector<Event>& events) const;
  void do_place(WorldState& s, int slot, std::vector<Event>& events) const;
  void do_destroy(WorldState& s, int slot, std::vector<Event>& events) const;
  void move_mobs(WorldState& s) const;
  bool table_nearby(const WorldState& s) const;

  std::shared_ptr<const Registry> registry_;
  TaskSpec task_;
  EnvOptions options_;
};

/// Stateful convenience wrapper: one simulator plus the current episode.
class Env {
 public:
  Env(std::shared_ptr<const Registry> registry, TaskSpec task, EnvOptions options = {});

  const Observation& reset(std::uint64_t seed);
  const StepResult& step(const MultiDiscreteAction& action);

  const WorldState& state() const { return state_; }
  WorldState& mutable_state() { return state_; }
  /// Recomputes the observation after the state was edited through mutable_state().
  const Observation& refresh();
  const Observation& observation() const { return obs_; }
  const Simulator& simulator() const { return sim_; }
  bool done() const { return state_.done; }

 private:
  Simulator sim_;
  WorldState state_;
  Observation obs_;
  StepResult last_;
};

/// Fan ray cast via grid traversal (first solid cell per ray, entities in front of it).
std::vector<Ray> ray_cast(const WorldState& state, const EnvOptions& options);

/// Direction (dx, dy) of ray i for the given heading.
std::pair<double, double> ray_direction(Heading heading, int ray, const EnvOptions& options);

/// One-line debug record of the world (grid rows, agent, inventory, tick).
std::string snapshot_record(const WorldState& state);

}  // namespace hcraft::env
