#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcraft/agents/backend.hpp"
#include "hcraft/agents/prompts.hpp"
#include "hcraft/env/simulator.hpp"
#include "hcraft/script/interpreter.hpp"

namespace hcraft::agents {

enum class Mode { kCode, kLearn };
enum class Placement { kSequential, kMacro };

struct SubAction {
  std::string description;
  Mode mode = Mode::kCode;
  Placement placement = Placement::kSequential;  // meaningful for coded sub-actions
  std::string explain;
  friend bool operator==(const SubAction&, const SubAction&) = default;
};

struct SubActionPlan {
  std::string explain;
  std::vector<SubAction> actions;
  std::string raw;  // response text the plan was parsed from

  /// Index of the learned sub-action, or -1.
  int learn_index() const;
};

/// Response did not follow the mandated slow-agent format.
class PlanFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The slow agent still violated the format after every retry. The run halts gracefully.
class PlanParseFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses
///   Explain: ...
///   Actions can be coded:
///   1) Action1: <text> | mode: code | use: sequential | explain: ...
/// Throws PlanFormatError on a missing header, an empty list, unknown keys or values, more than
/// one learned sub-action, or coded sequential sub-actions placed after the learned one.
SubActionPlan parse_plan(const std::string& text);

enum class Verdict { kSuccess, kFailure, kTooHardToCode };
std::string verdict_name(Verdict v);

struct CritiqueRecord {
  int round = 0;
  std::string sub_action;
  Verdict verdict = Verdict::kFailure;
  std::string rationale;
  std::string obs_before;
  std::string obs_after;

  /// One line as appended to the slow agent's prompt.
  std::string format() const;
  friend bool operator==(const CritiqueRecord&, const CritiqueRecord&) = default;
};

/// Compact text form of an observation: position, yaw, nearest sightings, inventory.
std::string summarize(const env::Observation& obs);

struct SlowRequest {
  const env::TaskSpec* task = nullptr;
  const ContextBundle* context = nullptr;
  int round = 1;
  const std::vector<CritiqueRecord>* critiques = nullptr;
  bool tips_enabled = true;
  bool code_only = false;
  std::function<void(const std::string&)> on_reject;  // sees each rejection reason as it happens
};

/// Slow prompt for a round. Planning tips appear only when enabled and some critique says
/// too-hard-to-code.
std::vector<Message> render_slow_prompt(const SlowRequest& req);

struct SlowResult {
  SubActionPlan plan;
  std::vector<std::string> rejected;  // reasons for each retried response
  std::string prompt;                 // rendered user message of the first request
};

/// Asks for a plan, retrying malformed responses up to `max_retries` times with a format
/// reminder. Beyond the format, a plan is rejected when it learns something in code-only mode or
/// re-emits a coded sub-action an earlier round found too hard to code.
/// Throws PlanParseFailure when retries run out.
SlowResult slow_plan(const SlowRequest& req, Backend& backend, int max_retries = 3);

struct FastRequest {
  const SubAction* sub_action = nullptr;
  const ContextBundle* context = nullptr;
  int attempt = 1;
  std::string last_code;
  std::string execution_error;
  std::string critique;
};

std::vector<Message> render_fast_prompt(const FastRequest& req);

/// Body of the first fenced code block, if any.
std::optional<std::string> extract_code(const std::string& response);

struct FastResult {
  std::optional<std::string> source;  // empty when no response carried a code block
  int retries = 0;
};

/// Throws ContractViolation on an empty sub-action description.
FastResult fast_code(const FastRequest& req, Backend& backend, int max_retries = 1);

class Critic {
 public:
  virtual ~Critic() = default;
  virtual CritiqueRecord judge(const SubAction& sub_action, const script::ScriptOutcome& outcome) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic rules over the observation deltas, keyed by intent words:
///  - faults, and step-cap exhaustion without inventory progress, fail;
///  - item verbs (harvest, cut, collect, mine, craft, obtain, ...) need an inventory gain;
///  - aim/face needs the named target on the centre ray afterwards;
///  - navigation verbs need the named target within reach (distance <= 1.5) afterwards;
///  - plain actions (attack, use, ...) need the script to have acted without fault.
class RuleCritic : public Critic {
 public:
  CritiqueRecord judge(const SubAction& sub_action, const script::ScriptOutcome& outcome) override;
  std::string name() const override { return "rules"; }
};

/// Critic backed by a language model; parses `Verdict:` and `Rationale:` lines. An unreadable
/// answer counts as failure.
class BackendCritic : public Critic {
 public:
  explicit BackendCritic(Backend& backend) : backend_(backend) {}
  CritiqueRecord judge(const SubAction& sub_action, const script::ScriptOutcome& outcome) override;
  std::string name() const override { return "backend:" + backend_.name(); }

 private:
  Backend& backend_;
};

/// Where coded candidates are tried: fresh episodes on fixed seeds, with the already accepted
/// sequential scripts run first.
struct ProbeSetup {
  std::shared_ptr<const env::Registry> registry;
  env::TaskSpec task;
  env::EnvOptions options;
  std::vector<std::uint64_t> seeds;
  std::vector<script::ScriptAst> prefix;
};

struct Attempt {
  int attempt = 0;
  std::string source;             // empty when no code came back
  std::string diagnostic;         // parse or compile diagnostic, `ERR ...`
  std::string execution_error;    // what the next fast prompt is told
  int probe_successes = 0;
  int probes = 0;
  Verdict verdict = Verdict::kFailure;
  std::vector<CritiqueRecord> critiques;  // one per probe
};

struct InnerResult {
  Verdict verdict = Verdict::kFailure;
  std::optional<script::ScriptAst> accepted;
  std::string accepted_source;
  std::vector<Attempt> attempts;
  CritiqueRecord critique;  // summary passed on to the slow agent
};

struct InnerOptions {
  int max_attempts = 4;
  int fast_retries = 1;
  int round = 0;
};

/// Code, parse, compile (macros), run on the probes and judge, feeding diagnostics and critiques
/// into the next attempt. A candidate is accepted when the critic approves a strict majority of
/// the probes. After max_attempts failures the verdict is too-hard-to-code.
/// Throws ContractViolation when max_attempts < 1 or the sub-action is not coded.
InnerResult inner_loop(const SubAction& sub_action, const ContextBundle& context, const ProbeSetup& probes,
                       Backend& backend, Critic& critic, const InnerOptions& options);

}  // namespace hcraft::agents
