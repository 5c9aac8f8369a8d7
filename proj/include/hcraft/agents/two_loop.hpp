#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hcraft/agents/agents.hpp"
#include "hcraft/ppo/trainer.hpp"

namespace hcraft::agents {

struct TwoLoopOptions {
  int max_rounds = 3;
  int inner_attempts = 4;
  long rl_frames = 150000;          // per round that learns something
  double success_threshold = 0.5;   // evaluation success that counts as task complete
  bool planning_tips = true;
  bool code_only = false;
  int plan_retries = 3;
  int fast_retries = 1;
  int probes = 3;
  int eval_episodes = 100;
  std::uint64_t seed = 1;
  ppo::RlConfig rl;                 // reward and PPO settings; task, macros and prefix are filled per round
};

/// One line of the event log.
struct Event {
  std::string kind;
  int round = 0;
  nlohmann::json data;  // kind-specific fields
  friend bool operator==(const Event&, const Event&) = default;
};

/// `{"seq":..,"event":..,"round":..,<data>}`; the wall-clock field "t" is added only when asked.
std::string event_line(const Event& e, std::size_t seq, bool with_time);

struct InnerLog {
  int index = 0;  // position of the sub-action in the plan
  SubAction sub_action;
  InnerResult result;
};

struct RoundRecord {
  int round = 0;
  std::string slow_prompt;
  std::vector<std::string> plan_rejections;
  SubActionPlan plan;
  std::vector<InnerLog> inner;
  bool used_rl = false;
  std::vector<ppo::IterationMetrics> rl_metrics;
  long rl_frames = 0;
  double success = 0.0;
  std::vector<CritiqueRecord> critiques;  // appended to the slow prompt at the end of the round
};

enum class RunStatus { kRunning, kSolved, kBudgetExhausted, kParseFailure, kInterrupted };
std::string status_name(RunStatus s);

struct IterationState {
  int outer_round = 0;                     // completed rounds
  std::vector<CritiqueRecord> critiques;   // append-only
  std::vector<RoundRecord> rounds;
  RunStatus status = RunStatus::kRunning;
};

struct RunReport {
  std::string task_id;
  IterationState state;
  double final_success = 0.0;  // success of the last completed round
  long total_rl_frames = 0;
  std::vector<Event> events;
  std::string error;           // parse failure or backend outage message
};

struct Agents {
  Backend* slow = nullptr;
  Backend* fast = nullptr;
  Critic* critic = nullptr;
};

struct RunHooks {
  std::function<void(const Event&)> on_event;
  /// Called after every completed round with a resumable checkpoint.
  std::function<void(const nlohmann::json&)> on_checkpoint;
  /// Sees the best policy of every round that trained one.
  std::function<void(int round, const ppo::TrainResult&)> on_policy;
};

/// Slow loop around fast inner loops: plan, code and judge each coded sub-action, build the action
/// space (sequential prefix plus injected macros), train the learned sub-action or evaluate the
/// all-code plan, append the round's critiques, stop when solved or out of rounds. A backend
/// outage stops the run with status interrupted; the last checkpoint resumes it.
RunReport two_loop(const env::TaskSpec& task, std::shared_ptr<const env::Registry> registry, const Agents& agents,
                   const TwoLoopOptions& options, const RunHooks& hooks = {},
                   const nlohmann::json* resume_from = nullptr);

/// Checkpoint document: completed rounds, critiques, events so far and backend replay state.
nlohmann::json make_checkpoint(const RunReport& report, const Agents& agents);

/// Report without the event list; the inverse of report_from_json.
nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& doc);

/// Seeds of the probe episodes coded candidates are tried on.
std::uint64_t probe_seed_base(std::uint64_t seed);

/// Success fraction of a coded plan with no learning: accepted scripts run in plan order.
double evaluate_code_plan(const std::vector<script::ScriptAst>& scripts, const env::TaskSpec& task,
                          std::shared_ptr<const env::Registry> registry, const env::EnvOptions& options, int episodes,
                          std::uint64_t seed_base);

}  // namespace hcraft::agents
