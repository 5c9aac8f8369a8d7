#include "hcraft/agents/two_loop.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "hcraft/common/errors.hpp"
#include "hcraft/script/parser.hpp"

namespace hcraft::agents {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

std::string mode_name(Mode m) { return m == Mode::kCode ? "code" : "learn"; }
std::string placement_name(Placement p) { return p == Placement::kSequential ? "sequential" : "macro"; }

Verdict verdict_from(const std::string& s) {
  if (s == "success") return Verdict::kSuccess;
  if (s == "failure") return Verdict::kFailure;
  if (s == "too-hard-to-code") return Verdict::kTooHardToCode;
  throw ConfigError("unknown verdict '" + s + "'");
}

RunStatus status_from(const std::string& s) {
  for (auto st : {RunStatus::kRunning, RunStatus::kSolved, RunStatus::kBudgetExhausted, RunStatus::kParseFailure,
                  RunStatus::kInterrupted}) {
    if (status_name(st) == s) return st;
  }
  throw ConfigError("unknown run status '" + s + "'");
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double num_from(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

json sub_json(const SubAction& a) {
  return {{"description", a.description}, {"mode", mode_name(a.mode)}, {"use", placement_name(a.placement)},
          {"explain", a.explain}};
}

SubAction sub_from(const json& j) {
  SubAction a;
  a.description = j.at("description").get<std::string>();
  a.mode = j.at("mode").get<std::string>() == "learn" ? Mode::kLearn : Mode::kCode;
  a.placement = j.at("use").get<std::string>() == "macro" ? Placement::kMacro : Placement::kSequential;
  a.explain = j.at("explain").get<std::string>();
  return a;
}

json critique_json(const CritiqueRecord& c) {
  return {{"round", c.round},          {"sub_action", c.sub_action}, {"verdict", verdict_name(c.verdict)},
          {"rationale", c.rationale}, {"obs_before", c.obs_before}, {"obs_after", c.obs_after}};
}

CritiqueRecord critique_from(const json& j) {
  return {j.at("round").get<int>(),
          j.at("sub_action").get<std::string>(),
          verdict_from(j.at("verdict").get<std::string>()),
          j.at("rationale").get<std::string>(),
          j.at("obs_before").get<std::string>(),
          j.at("obs_after").get<std::string>()};
}

json critiques_json(const std::vector<CritiqueRecord>& cs) {
  json out = json::array();
  for (const auto& c : cs) out.push_back(critique_json(c));
  return out;
}

std::vector<CritiqueRecord> critiques_from(const json& j) {
  std::vector<CritiqueRecord> out;
  for (const auto& c : j) out.push_back(critique_from(c));
  return out;
}

json attempt_json(const Attempt& a) {
  return {{"attempt", a.attempt},
          {"source", a.source},
          {"diagnostic", a.diagnostic},
          {"execution_error", a.execution_error},
          {"probe_successes", a.probe_successes},
          {"probes", a.probes},
          {"verdict", verdict_name(a.verdict)},
          {"critiques", critiques_json(a.critiques)}};
}

Attempt attempt_from(const json& j) {
  Attempt a;
  a.attempt = j.at("attempt").get<int>();
  a.source = j.at("source").get<std::string>();
  a.diagnostic = j.at("diagnostic").get<std::string>();
  a.execution_error = j.at("execution_error").get<std::string>();
  a.probe_successes = j.at("probe_successes").get<int>();
  a.probes = j.at("probes").get<int>();
  a.verdict = verdict_from(j.at("verdict").get<std::string>());
  a.critiques = critiques_from(j.at("critiques"));
  return a;
}

json inner_json(const InnerLog& log) {
  json attempts = json::array();
  for (const auto& a : log.result.attempts) attempts.push_back(attempt_json(a));
  return {{"index", log.index},
          {"sub_action", sub_json(log.sub_action)},
          {"verdict", verdict_name(log.result.verdict)},
          {"accepted", log.result.accepted.has_value()},
          {"accepted_source", log.result.accepted_source},
          {"attempts", attempts},
          {"critique", critique_json(log.result.critique)}};
}

InnerLog inner_from(const json& j) {
  InnerLog log;
  log.index = j.at("index").get<int>();
  log.sub_action = sub_from(j.at("sub_action"));
  log.result.verdict = verdict_from(j.at("verdict").get<std::string>());
  log.result.accepted_source = j.at("accepted_source").get<std::string>();
  if (j.at("accepted").get<bool>()) log.result.accepted = script::parse_or_throw(log.result.accepted_source);
  for (const auto& a : j.at("attempts")) log.result.attempts.push_back(attempt_from(a));
  log.result.critique = critique_from(j.at("critique"));
  return log;
}

json metrics_json(const ppo::IterationMetrics& m) {
  return {{"iteration", m.iteration},         {"frames", m.frames},
          {"episodes", m.episodes},           {"train_success", num(m.train_success)},
          {"mean_return", num(m.mean_return)}, {"eval_success", num(m.eval_success)},
          {"policy_loss", num(m.policy_loss)}, {"value_loss", num(m.value_loss)},
          {"entropy", num(m.entropy)},         {"skipped_updates", m.skipped_updates}};
}

ppo::IterationMetrics metrics_from(const json& j) {
  ppo::IterationMetrics m;
  m.iteration = j.at("iteration").get<int>();
  m.frames = j.at("frames").get<long>();
  m.episodes = j.at("episodes").get<int>();
  m.train_success = num_from(j.at("train_success"));
  m.mean_return = num_from(j.at("mean_return"));
  m.eval_success = num_from(j.at("eval_success"));
  m.policy_loss = num_from(j.at("policy_loss"));
  m.value_loss = num_from(j.at("value_loss"));
  m.entropy = num_from(j.at("entropy"));
  m.skipped_updates = j.at("skipped_updates").get<int>();
  return m;
}

json round_json(const RoundRecord& r) {
  json plan{{"explain", r.plan.explain}, {"raw", r.plan.raw}, {"actions", json::array()}};
  for (const auto& a : r.plan.actions) plan["actions"].push_back(sub_json(a));
  json inner = json::array();
  for (const auto& l : r.inner) inner.push_back(inner_json(l));
  json metrics = json::array();
  for (const auto& m : r.rl_metrics) metrics.push_back(metrics_json(m));
  return {{"round", r.round},       {"slow_prompt", r.slow_prompt}, {"plan_rejections", r.plan_rejections},
          {"plan", plan},           {"inner", inner},               {"used_rl", r.used_rl},
          {"rl_metrics", metrics},  {"rl_frames", r.rl_frames},     {"success", r.success},
          {"critiques", critiques_json(r.critiques)}};
}

RoundRecord round_from(const json& j) {
  RoundRecord r;
  r.round = j.at("round").get<int>();
  r.slow_prompt = j.at("slow_prompt").get<std::string>();
  r.plan_rejections = j.at("plan_rejections").get<std::vector<std::string>>();
  r.plan.explain = j.at("plan").at("explain").get<std::string>();
  r.plan.raw = j.at("plan").at("raw").get<std::string>();
  for (const auto& a : j.at("plan").at("actions")) r.plan.actions.push_back(sub_from(a));
  for (const auto& l : j.at("inner")) r.inner.push_back(inner_from(l));
  r.used_rl = j.at("used_rl").get<bool>();
  for (const auto& m : j.at("rl_metrics")) r.rl_metrics.push_back(metrics_from(m));
  r.rl_frames = j.at("rl_frames").get<long>();
  r.success = j.at("success").get<double>();
  r.critiques = critiques_from(j.at("critiques"));
  return r;
}

json event_json(const Event& e) { return {{"event", e.kind}, {"round", e.round}, {"data", e.data}}; }
Event event_from(const json& j) { return {j.at("event").get<std::string>(), j.at("round").get<int>(), j.at("data")}; }

void check_options(const TwoLoopOptions& o) {
  if (o.max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
  if (o.inner_attempts < 1) throw ConfigError("inner_attempts must be at least 1");
  if (o.probes < 1 || o.eval_episodes < 1) throw ConfigError("probe and evaluation counts must be positive");
  if (o.plan_retries < 0 || o.fast_retries < 0) throw ConfigError("retry counts must not be negative");
  if (!(o.success_threshold >= 0.0 && o.success_threshold <= 1.0)) throw ConfigError("success_threshold must lie in [0, 1]");
  if (o.rl_frames < 1) throw ConfigError("rl_frames must be positive");
}

}  // namespace

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::kRunning: return "running";
    case RunStatus::kSolved: return "solved";
    case RunStatus::kBudgetExhausted: return "budget-exhausted";
    case RunStatus::kParseFailure: return "parse-failure";
    case RunStatus::kInterrupted: return "interrupted";
  }
  return "unknown";
}

std::string event_line(const Event& e, std::size_t seq, bool with_time) {
  nlohmann::ordered_json line;
  line["seq"] = seq;
  line["event"] = e.kind;
  line["round"] = e.round;
  for (const auto& [k, v] : e.data.items()) line[k] = v;
  if (with_time) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    line["t"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count() / 1000.0;
  }
  return line.dump();
}

std::uint64_t probe_seed_base(std::uint64_t seed) { return 7'000'000'000ULL + seed * 100'003ULL; }

double evaluate_code_plan(const std::vector<script::ScriptAst>& scripts, const env::TaskSpec& task,
                          std::shared_ptr<const env::Registry> registry, const env::EnvOptions& options, int episodes,
                          std::uint64_t seed_base) {
  if (episodes < 1) throw ContractViolation("evaluation needs at least one episode");
  env::Env env(std::move(registry), task, options);
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    env.reset(seed_base + static_cast<std::uint64_t>(e));
    for (const auto& s : scripts) {
      const int remaining = task.max_steps - static_cast<int>(env.state().tick);
      if (env.done() || remaining <= 0) break;
      script::EnvActuator act(env);
      script::interpret(s, act, remaining);
    }
    successes += env.state().success ? 1 : 0;
  }
  return static_cast<double>(successes) / episodes;
}

json to_json(const RunReport& report) {
  json rounds = json::array();
  for (const auto& r : report.state.rounds) rounds.push_back(round_json(r));
  return {{"task_id", report.task_id},
          {"status", status_name(report.state.status)},
          {"outer_round", report.state.outer_round},
          {"final_success", report.final_success},
          {"total_rl_frames", report.total_rl_frames},
          {"error", report.error},
          {"critiques", critiques_json(report.state.critiques)},
          {"rounds", rounds}};
}

RunReport report_from_json(const json& doc) {
  RunReport r;
  try {
    r.task_id = doc.at("task_id").get<std::string>();
    r.state.status = status_from(doc.at("status").get<std::string>());
    r.state.outer_round = doc.at("outer_round").get<int>();
    r.final_success = doc.at("final_success").get<double>();
    r.total_rl_frames = doc.at("total_rl_frames").get<long>();
    r.error = doc.at("error").get<std::string>();
    r.state.critiques = critiques_from(doc.at("critiques"));
    for (const auto& j : doc.at("rounds")) r.state.rounds.push_back(round_from(j));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run report: ") + e.what());
  }
  return r;
}

json make_checkpoint(const RunReport& report, const Agents& agents) {
  json events = json::array();
  for (const auto& e : report.events) events.push_back(event_json(e));
  json backends{{"slow", agents.slow ? agents.slow->save_state() : json(nullptr)},
                {"fast", agents.fast ? agents.fast->save_state() : json(nullptr)}};
  return {{"format", "hcraft-run-checkpoint"}, {"version", kCheckpointVersion}, {"report", to_json(report)},
          {"events", events}, {"backends", backends}};
}

namespace {

void restore(const json& cp, RunReport& report, const Agents& agents, const std::string& task_id) {
  try {
    if (cp.at("format").get<std::string>() != "hcraft-run-checkpoint") throw ConfigError("not a run checkpoint");
    if (cp.at("version").get<int>() != kCheckpointVersion) {
      throw ConfigError("unsupported checkpoint version " + cp.at("version").dump());
    }
    report = report_from_json(cp.at("report"));
    for (const auto& e : cp.at("events")) report.events.push_back(event_from(e));
    agents.slow->restore_state(cp.at("backends").at("slow"));
    agents.fast->restore_state(cp.at("backends").at("fast"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
  if (report.task_id != task_id) throw ConfigError("checkpoint belongs to task '" + report.task_id + "'");
}

}  // namespace

RunReport two_loop(const env::TaskSpec& task, std::shared_ptr<const env::Registry> registry, const Agents& agents,
                   const TwoLoopOptions& options, const RunHooks& hooks, const json* resume_from) {
  if (agents.slow == nullptr || agents.fast == nullptr || agents.critic == nullptr) {
    throw ContractViolation("two_loop needs slow, fast and critic agents");
  }
  check_options(options);
  options.rl.validate();

  RunReport report;
  auto emit = [&](const std::string& kind, int round, json data) {
    report.events.push_back({kind, round, std::move(data)});
    if (hooks.on_event) hooks.on_event(report.events.back());
  };
  auto checkpoint = [&] {
    if (hooks.on_checkpoint) hooks.on_checkpoint(make_checkpoint(report, agents));
  };
  auto finish = [&] {
    emit("run_end", report.state.outer_round,
         {{"status", status_name(report.state.status)}, {"final_success", report.final_success},
          {"rounds", report.state.outer_round}, {"rl_frames", report.total_rl_frames}});
  };

  if (resume_from != nullptr) {
    restore(*resume_from, report, agents, task.task_id);
    if (report.state.status != RunStatus::kRunning) return report;
  } else {
    report.task_id = task.task_id;
    emit("run_start", 0,
         {{"task", task.task_id}, {"max_rounds", options.max_rounds}, {"success_threshold", options.success_threshold},
          {"planning_tips", options.planning_tips}, {"code_only", options.code_only}, {"seed", options.seed}});
    checkpoint();
  }

  const env::Simulator sim(registry, task, options.rl.env_options);
  const auto base_space = ppo::build_action_space(sim.cardinalities(), {});
  const ContextBundle context = make_context(*registry, task, base_space);
  ProbeSetup probes{registry, task, options.rl.env_options, {}, {}};
  for (int i = 0; i < options.probes; ++i) probes.seeds.push_back(probe_seed_base(options.seed) + static_cast<std::uint64_t>(i));

  try {
    while (report.state.outer_round < options.max_rounds) {
      RoundRecord rec;
      rec.round = report.state.outer_round + 1;
      const int round = rec.round;
      emit("round_start", round, json::object());

      SlowRequest req{&task, &context, round, &report.state.critiques, options.planning_tips, options.code_only, {}};
      req.on_reject = [&](const std::string& why) { emit("plan_retry", round, {{"reason", why}}); };
      SlowResult slow;
      try {
        slow = slow_plan(req, *agents.slow, options.plan_retries);
      } catch (const PlanParseFailure& e) {
        report.error = e.what();
        emit("plan_failed", round, {{"error", report.error}});
        report.state.status = RunStatus::kParseFailure;
        finish();
        return report;
      }
      rec.slow_prompt = slow.prompt;
      rec.plan_rejections = slow.rejected;
      rec.plan = slow.plan;
      json plan_actions = json::array();
      for (const auto& a : rec.plan.actions) plan_actions.push_back(sub_json(a));
      emit("slow_plan", round, {{"explain", rec.plan.explain}, {"actions", plan_actions}});

      // Accepted scripts: sequential ones form the reset prefix, macros extend the action space.
      std::vector<script::ScriptAst> prefix;
      std::vector<script::MacroAction> macros;
      std::vector<script::ScriptAst> in_order;
      for (std::size_t i = 0; i < rec.plan.actions.size(); ++i) {
        const auto& a = rec.plan.actions[i];
        if (a.mode != Mode::kCode) continue;
        emit("inner_begin", round, {{"index", i}, {"sub_action", a.description}, {"use", placement_name(a.placement)}});
        probes.prefix = prefix;
        InnerLog log{static_cast<int>(i), a,
                     inner_loop(a, context, probes, *agents.fast, *agents.critic,
                                {options.inner_attempts, options.fast_retries, round})};
        for (const auto& at : log.result.attempts) {
          emit("attempt", round,
               {{"index", i}, {"attempt", at.attempt}, {"source", at.source}, {"diagnostic", at.diagnostic},
                {"execution_error", at.execution_error}, {"probes", at.probes},
                {"probe_successes", at.probe_successes}, {"verdict", verdict_name(at.verdict)}});
        }
        const auto& c = log.result.critique;
        emit("critique", round, {{"sub_action", c.sub_action}, {"verdict", verdict_name(c.verdict)}, {"rationale", c.rationale}});
        rec.critiques.push_back(c);
        emit("inner_end", round, {{"index", i}, {"verdict", verdict_name(log.result.verdict)},
                                  {"accepted_source", log.result.accepted_source}});
        if (log.result.accepted) {
          in_order.push_back(*log.result.accepted);
          if (a.placement == Placement::kSequential) {
            prefix.push_back(*log.result.accepted);
          } else {
            std::string id = a.description;
            for (const auto& m : macros) {
              if (m.id() == id) id += " #" + std::to_string(i);
            }
            macros.push_back(script::compile_macro(id, *log.result.accepted));
          }
        }
        rec.inner.push_back(std::move(log));
      }

      const int learn = rec.plan.learn_index();
      std::string judged = task.task_id;
      if (learn >= 0) {
        ppo::RlConfig cfg = options.rl;
        cfg.task_id = task.task_id;
        cfg.task = task;
        cfg.macros = macros;
        cfg.prefix = prefix;
        cfg.seed = options.seed;
        cfg.eval_episodes = options.eval_episodes;
        try {
          const auto trained = ppo::train(cfg, registry, options.rl_frames);
          rec.used_rl = true;
          rec.rl_metrics = trained.metrics;
          rec.rl_frames = trained.frames_used;
          rec.success = trained.final_success;
          judged = rec.plan.actions[static_cast<std::size_t>(learn)].description;
          json frames = json::array(), eval = json::array(), train_success = json::array(), ret = json::array();
          for (const auto& m : trained.metrics) {
            frames.push_back(m.frames);
            eval.push_back(num(m.eval_success));
            train_success.push_back(num(m.train_success));
            ret.push_back(num(m.mean_return));
          }
          emit("rl_training", round,
               {{"sub_action", judged}, {"macros", macros.size()}, {"prefix_scripts", prefix.size()},
                {"frames", rec.rl_frames}, {"iterations", trained.metrics.size()},
                {"best_eval_success", trained.best_eval_success}, {"success", rec.success},
                {"episodes", options.eval_episodes}, {"curve_frames", frames}, {"curve_eval_success", eval},
                {"curve_train_success", train_success}, {"curve_mean_return", ret}});
          if (hooks.on_policy) hooks.on_policy(round, trained);
        } catch (const ppo::NoDecisionError&) {
          // The coded part already ends every episode; judge it as code.
        }
      }
      if (!rec.used_rl) {
        rec.success = evaluate_code_plan(in_order, task, registry, options.rl.env_options, options.eval_episodes,
                                         ppo::final_seed_base(options.seed));
        emit("code_eval", round,
             {{"scripts", in_order.size()}, {"episodes", options.eval_episodes}, {"success", rec.success},
              {"reason", learn >= 0 ? "episodes end before anything is learned" : "all sub-actions coded"}});
      }

      const bool solved = rec.success >= options.success_threshold;
      char rate[64];
      std::snprintf(rate, sizeof rate, "%.3f over %d episodes (threshold %.2f)", rec.success, options.eval_episodes,
                    options.success_threshold);
      CritiqueRecord outcome{round, judged, solved ? Verdict::kSuccess : Verdict::kFailure,
                             std::string(rec.used_rl ? "trained policy" : "coded plan") + " success " + rate, "", ""};
      emit("critique", round, {{"sub_action", outcome.sub_action}, {"verdict", verdict_name(outcome.verdict)},
                               {"rationale", outcome.rationale}});
      rec.critiques.push_back(outcome);

      // P_slow grows by this round's critiques only.
      json lines = json::array();
      for (const auto& c : rec.critiques) {
        report.state.critiques.push_back(c);
        lines.push_back(c.format());
      }
      emit("prompt_append", round, {{"count", rec.critiques.size()}, {"lines", lines}});

      report.total_rl_frames += rec.rl_frames;
      report.final_success = rec.success;
      report.state.rounds.push_back(std::move(rec));
      report.state.outer_round = round;
      if (solved) report.state.status = RunStatus::kSolved;
      emit("round_end", round, {{"success", report.final_success}, {"solved", solved}});
      if (solved) break;
      if (report.state.outer_round < options.max_rounds) checkpoint();
    }
    if (report.state.status == RunStatus::kRunning) report.state.status = RunStatus::kBudgetExhausted;
    finish();
    checkpoint();
  } catch (const BackendError& e) {
    report.error = e.what();
    report.state.status = RunStatus::kInterrupted;
    emit("backend_error", report.state.outer_round + 1, {{"error", report.error}});
    finish();
  }
  return report;
}

}  // namespace hcraft::agents
