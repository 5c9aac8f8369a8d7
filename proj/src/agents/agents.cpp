#include "hcraft/agents/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>

#include "hcraft/common/errors.hpp"
#include "hcraft/script/parser.hpp"

namespace hcraft::agents {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string fmt_dist(double d) {
  if (!std::isfinite(d)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << d;
  return os.str();
}

}  // namespace

int SubActionPlan::learn_index() const {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].mode == Mode::kLearn) return static_cast<int>(i);
  }
  return -1;
}

SubActionPlan parse_plan(const std::string& text) {
  static const std::string kHeader = "Actions can be coded:";
  static const std::regex item_re(R"(^\s*(\d+)\s*[).]\s*(.*)$)");
  static const std::regex label_re(R"(^Action\s*\d+\s*:\s*)", std::regex::icase);
  SubActionPlan plan;
  plan.raw = text;
  const auto lines = split_lines(text);
  std::size_t header = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).rfind(kHeader, 0) == 0) {
      header = i;
      break;
    }
  }
  if (header == lines.size()) throw PlanFormatError("missing 'Actions can be coded:' header");
  for (std::size_t i = 0; i < header; ++i) {
    const auto t = trim(lines[i]);
    if (t.rfind("Explain:", 0) == 0) {
      plan.explain = trim(t.substr(8));
    } else if (!plan.explain.empty() && !t.empty()) {
      plan.explain += " " + t;
    }
  }
  for (std::size_t i = header + 1; i < lines.size(); ++i) {
    std::smatch m;
    if (!std::regex_match(lines[i], m, item_re)) continue;
    std::string rest = std::regex_replace(std::string(m[2]), label_re, "", std::regex_constants::format_first_only);
    std::vector<std::string> parts;
    std::stringstream ss(rest);
    for (std::string p; std::getline(ss, p, '|');) parts.push_back(trim(p));
    SubAction sub;
    sub.description = parts.empty() ? "" : parts[0];
    if (sub.description.empty()) throw PlanFormatError("sub-action " + std::string(m[1]) + " has no description");
    bool has_mode = false;
    for (std::size_t k = 1; k < parts.size(); ++k) {
      const auto colon = parts[k].find(':');
      if (colon == std::string::npos) throw PlanFormatError("expected key: value in '" + parts[k] + "'");
      const auto key = lower(trim(parts[k].substr(0, colon)));
      const auto value = trim(parts[k].substr(colon + 1));
      const auto v = lower(value);
      if (key == "mode") {
        if (v == "code") sub.mode = Mode::kCode;
        else if (v == "learn") sub.mode = Mode::kLearn;
        else throw PlanFormatError("mode must be code or learn, got '" + value + "'");
        has_mode = true;
      } else if (key == "use") {
        if (v == "sequential") sub.placement = Placement::kSequential;
        else if (v == "macro") sub.placement = Placement::kMacro;
        else throw PlanFormatError("use must be sequential or macro, got '" + value + "'");
      } else if (key == "explain") {
        sub.explain = value;
      } else {
        throw PlanFormatError("unknown field '" + key + "'");
      }
    }
    if (!has_mode) throw PlanFormatError("sub-action '" + sub.description + "' has no mode");
    plan.actions.push_back(std::move(sub));
  }
  if (plan.actions.empty()) throw PlanFormatError("no sub-actions listed");
  int learned = 0;
  for (const auto& a : plan.actions) learned += a.mode == Mode::kLearn ? 1 : 0;
  if (learned > 1) throw PlanFormatError("at most one sub-action can be learned");
  const int li = plan.learn_index();
  if (li >= 0) {
    for (std::size_t i = static_cast<std::size_t>(li) + 1; i < plan.actions.size(); ++i) {
      const auto& a = plan.actions[i];
      if (a.mode == Mode::kCode && a.placement == Placement::kSequential) {
        throw PlanFormatError("sequential sub-action '" + a.description + "' comes after the learned one; make it a macro");
      }
    }
  }
  return plan;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kSuccess: return "success";
    case Verdict::kFailure: return "failure";
    case Verdict::kTooHardToCode: return "too-hard-to-code";
  }
  return "failure";
}

std::string CritiqueRecord::format() const {
  return "[round " + std::to_string(round) + "] " + sub_action + ": " + verdict_name(verdict) + ". " + rationale;
}

std::string summarize(const env::Observation& obs) {
  std::ostringstream os;
  os << "pos=(" << obs.pos.x << "," << obs.pos.y << ") yaw=" << static_cast<int>(obs.yaw) << " tick=" << obs.tick;
  for (const char* name : {"tree", "stone", "water", "crafting_table", "cow", "sheep"}) {
    const double d = obs.nearest(name);
    if (std::isfinite(d)) os << ' ' << name << '=' << fmt_dist(d);
  }
  const auto& front = obs.center_ray();
  os << " front=" << (front.entity_name != "none" && front.entity_distance < front.block_distance ? front.entity_name : front.block_name);
  os << " inventory:";
  bool any = false;
  for (std::size_t i = 0; i < obs.inventory_names.size(); ++i) {
    if (obs.inventory_counts[i] <= 0) continue;
    os << ' ' << obs.inventory_names[i] << 'x' << obs.inventory_counts[i];
    any = true;
  }
  if (!any) os << " empty";
  return os.str();
}

std::vector<Message> render_slow_prompt(const SlowRequest& req) {
  if (req.task == nullptr || req.context == nullptr || req.critiques == nullptr) {
    throw ContractViolation("slow prompt needs a task, a context and a critique list");
  }
  std::string critique;
  bool too_hard = false;
  for (const auto& c : *req.critiques) {
    critique += c.format() + "\n";
    too_hard = too_hard || c.verdict == Verdict::kTooHardToCode;
  }
  if (critique.empty()) critique = "none yet\n";
  const auto& ctx = *req.context;
  return slow_template().render({
      {"mode_instruction", req.code_only ? code_only_instruction() : std::string()},
      {"round", std::to_string(req.round)},
      {"task", ctx.task_prompt},
      {"context", ctx.env_summary + "\n" + ctx.act_info},
      {"critique", critique},
      {"programs", ctx.primitives + "\n" + ctx.examples},
      {"planning_tips", req.tips_enabled && too_hard ? planning_tips() : std::string()},
  });
}

namespace {

std::string normalized(const std::string& s) { return lower(trim(s)); }

}  // namespace

SlowResult slow_plan(const SlowRequest& req, Backend& backend, int max_retries) {
  auto messages = render_slow_prompt(req);
  SlowResult out;
  out.prompt = messages.back().content;
  std::set<std::string> too_hard;
  for (const auto& c : *req.critiques) {
    if (c.verdict == Verdict::kTooHardToCode) too_hard.insert(normalized(c.sub_action));
  }
  for (int attempt = 0;; ++attempt) {
    const std::string response = backend.complete(messages);
    std::string problem;
    try {
      auto plan = parse_plan(response);
      if (req.code_only && plan.learn_index() >= 0) problem = "code-only mode: every sub-action must be coded";
      for (const auto& a : plan.actions) {
        if (problem.empty() && a.mode == Mode::kCode && too_hard.count(normalized(a.description))) {
          problem = "sub-action '" + a.description + "' was too hard to code before; subdivide it or learn it";
        }
      }
      if (problem.empty()) {
        out.plan = std::move(plan);
        return out;
      }
    } catch (const PlanFormatError& e) {
      problem = e.what();
    }
    out.rejected.push_back(problem);
    if (req.on_reject) req.on_reject(problem);
    if (attempt >= max_retries) {
      throw PlanParseFailure("slow agent response rejected after " + std::to_string(attempt + 1) + " tries: " + problem);
    }
    messages.push_back({"assistant", response});
    messages.push_back({"user", "Your response was rejected: " + problem +
                                    ".\nYou should only respond in the format as described below:\n" +
                                    slow_template().response_format});
  }
}

std::vector<Message> render_fast_prompt(const FastRequest& req) {
  if (req.sub_action == nullptr || req.context == nullptr) throw ContractViolation("fast prompt needs a sub-action and a context");
  const auto& ctx = *req.context;
  return fast_template().render({
      {"primitives", ctx.primitives},
      {"examples", ctx.examples},
      {"obs_info", ctx.obs_info},
      {"act_info", ctx.act_info},
      {"task", req.sub_action->description},
      {"context", ctx.task_prompt},
      {"attempt", std::to_string(req.attempt)},
      {"last_code", req.last_code.empty() ? "none" : req.last_code},
      {"execution_error", req.execution_error.empty() ? "none" : req.execution_error},
      {"critique", req.critique.empty() ? "none" : req.critique},
  });
}

std::optional<std::string> extract_code(const std::string& response) {
  const auto open = response.find("```");
  if (open == std::string::npos) return std::nullopt;
  const auto body = response.find('\n', open);
  if (body == std::string::npos) return std::nullopt;
  const auto close = response.find("```", body + 1);
  if (close == std::string::npos) return std::nullopt;
  return response.substr(body + 1, close - body - 1);
}

FastResult fast_code(const FastRequest& req, Backend& backend, int max_retries) {
  if (req.sub_action == nullptr || trim(req.sub_action->description).empty()) {
    throw ContractViolation("fast agent needs a non-empty sub-action description");
  }
  auto messages = render_fast_prompt(req);
  FastResult out;
  for (int attempt = 0;; ++attempt) {
    const std::string response = backend.complete(messages);
    if (auto code = extract_code(response)) {
      out.source = std::move(code);
      return out;
    }
    if (attempt >= max_retries) return out;
    ++out.retries;
    messages.push_back({"assistant", response});
    messages.push_back({"user", "Your response has no code block.\nYou should only respond in the format as described below:\n" +
                                    fast_template().response_format});
  }
}

namespace {

std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : lower(text)) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      cur += c;
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool has_any(const std::vector<std::string>& words, std::initializer_list<const char*> keys) {
  for (const auto* k : keys) {
    if (std::find(words.begin(), words.end(), k) != words.end()) return true;
  }
  return false;
}

/// Block or entity the intent refers to, or empty.
std::string target_of(const std::string& intent) {
  const auto text = lower(intent);
  if (text.find("crafting table") != std::string::npos || text.find("crafting_table") != std::string::npos) return "crafting_table";
  const auto w = words_of(intent);
  for (const char* name : {"tree", "stone", "water", "cow", "sheep", "table"}) {
    if (has_any(w, {name}) || has_any(w, {(std::string(name) + "s").c_str()})) {
      return std::string(name) == "table" ? "crafting_table" : name;
    }
  }
  return "";
}

bool mentions(const std::vector<std::string>& words, const std::string& item) {
  std::string spaced = item;
  std::replace(spaced.begin(), spaced.end(), '_', ' ');
  const auto parts = words_of(spaced);
  if (parts.empty()) return false;
  for (std::size_t i = 0; i + parts.size() <= words.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto& w = words[i + k];
      ok = ok && (w == parts[k] || w == parts[k] + "s" || w == parts[k] + "es");
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

CritiqueRecord RuleCritic::judge(const SubAction& sub_action, const script::ScriptOutcome& outcome) {
  CritiqueRecord rec;
  rec.sub_action = sub_action.description;
  rec.obs_before = summarize(outcome.obs_before);
  rec.obs_after = summarize(outcome.obs_after);
  const auto& before = outcome.obs_before;
  const auto& after = outcome.obs_after;

  std::set<std::string> names;
  for (const auto* obs : {&before, &after}) {
    for (std::size_t i = 0; i < obs->inventory_names.size(); ++i) {
      if (!obs->inventory_names[i].empty() && obs->inventory_counts[i] > 0) names.insert(obs->inventory_names[i]);
    }
  }
  std::vector<std::string> gained;
  for (const auto& n : names) {
    if (after.count(n) > before.count(n)) gained.push_back(n);
  }
  auto fail = [&](std::string why) {
    rec.verdict = Verdict::kFailure;
    rec.rationale = std::move(why);
    return rec;
  };
  auto pass = [&](std::string why) {
    rec.verdict = Verdict::kSuccess;
    rec.rationale = std::move(why);
    return rec;
  };

  if (outcome.status == script::ScriptStatus::kRuntimeFault) return fail("runtime fault: " + outcome.detail);
  if (outcome.status == script::ScriptStatus::kStepCapExhausted && gained.empty()) {
    return fail("step cap exhausted without inventory progress (" + outcome.detail + ")");
  }

  const auto w = words_of(sub_action.description);
  const auto target = target_of(sub_action.description);
  if (has_any(w, {"harvest", "cut", "chop", "collect", "mine", "craft", "obtain", "gather", "get", "milk", "shear",
                  "hunt", "make"})) {
    std::vector<std::string> named;
    for (const auto& n : names) {
      if (mentions(w, n)) named.push_back(n);
    }
    for (const auto& g : gained) {
      if (named.empty() || std::find(named.begin(), named.end(), g) != named.end()) {
        return pass("inventory gained " + g + " (" + std::to_string(before.count(g)) + " -> " +
                    std::to_string(after.count(g)) + ")");
      }
    }
    return fail(gained.empty() ? "no inventory gain" : "inventory gained " + gained.front() + " but not the named item");
  }
  if (has_any(w, {"aim", "face", "facing"}) && !target.empty()) {
    const auto& ray = after.center_ray();
    if (ray.block_name == target || ray.entity_name == target) return pass("now facing " + target);
    return fail("not facing " + target + " afterwards");
  }
  if (has_any(w, {"navigate", "find", "approach", "go", "walk", "reach", "move", "search", "explore"}) && !target.empty()) {
    const double d0 = before.nearest(target);
    const double d1 = after.nearest(target);
    const std::string delta = "nearest " + target + " distance " + fmt_dist(d0) + " -> " + fmt_dist(d1);
    if (d1 <= 1.5) return pass(delta);
    return fail(delta);
  }
  if (outcome.steps_used > 0 && outcome.status == script::ScriptStatus::kSuccess) {
    return pass("ran " + std::to_string(outcome.steps_used) + " steps without fault");
  }
  if (outcome.status == script::ScriptStatus::kFailure) return fail("script reported failure: " + outcome.detail);
  return fail("the script did not act");
}

CritiqueRecord BackendCritic::judge(const SubAction& sub_action, const script::ScriptOutcome& outcome) {
  CritiqueRecord rec;
  rec.sub_action = sub_action.description;
  rec.obs_before = summarize(outcome.obs_before);
  rec.obs_after = summarize(outcome.obs_after);
  const auto messages = critic_template().render({
      {"task", sub_action.description},
      {"obs_before", rec.obs_before},
      {"obs_after", rec.obs_after},
      {"status", std::string(script::status_name(outcome.status)) + (outcome.detail.empty() ? "" : " (" + outcome.detail + ")")},
  });
  const std::string response = backend_.complete(messages);
  rec.verdict = Verdict::kFailure;
  rec.rationale = "unreadable critic answer";
  for (const auto& line : split_lines(response)) {
    const auto t = trim(line);
    if (lower(t).rfind("verdict:", 0) == 0) {
      rec.verdict = lower(trim(t.substr(8))) == "success" ? Verdict::kSuccess : Verdict::kFailure;
    } else if (lower(t).rfind("rationale:", 0) == 0) {
      rec.rationale = trim(t.substr(10));
    }
  }
  return rec;
}

namespace {

struct ProbeRun {
  CritiqueRecord critique;
  script::ScriptOutcome outcome;
};

ProbeRun run_probe(const SubAction& sub, const script::ScriptAst& ast, const std::optional<script::MacroAction>& macro,
                   const ProbeSetup& setup, std::uint64_t seed, Critic& critic) {
  env::Env env(setup.registry, setup.task, setup.options);
  env.reset(seed);
  for (const auto& p : setup.prefix) {
    if (env.done()) break;
    script::EnvActuator act(env);
    script::interpret(p, act, setup.task.max_steps - static_cast<int>(env.state().tick));
  }
  ProbeRun run;
  if (env.done()) {
    run.critique.sub_action = sub.description;
    run.critique.verdict = env.state().success ? Verdict::kSuccess : Verdict::kFailure;
    run.critique.rationale = env.state().success ? "task already complete before this sub-action" : "episode ended before this sub-action ran";
    run.outcome.obs_before = run.outcome.obs_after = env.observation();
    return run;
  }
  script::EnvActuator act(env);
  const int remaining = setup.task.max_steps - static_cast<int>(env.state().tick);
  run.outcome = macro ? macro->run(act, remaining).outcome : script::interpret(ast, act, remaining);
  run.critique = critic.judge(sub, run.outcome);
  return run;
}

}  // namespace

InnerResult inner_loop(const SubAction& sub_action, const ContextBundle& context, const ProbeSetup& probes,
                       Backend& backend, Critic& critic, const InnerOptions& options) {
  if (options.max_attempts < 1) throw ContractViolation("inner loop needs at least one attempt");
  if (sub_action.mode != Mode::kCode) throw ContractViolation("inner loop only handles coded sub-actions");
  if (probes.seeds.empty()) throw ContractViolation("inner loop needs at least one probe seed");
  InnerResult result;
  FastRequest req;
  req.sub_action = &sub_action;
  req.context = &context;
  for (int k = 1; k <= options.max_attempts; ++k) {
    req.attempt = k;
    Attempt at;
    at.attempt = k;
    const auto code = fast_code(req, backend, options.fast_retries);
    if (!code.source) {
      at.execution_error = "the response contained no code block";
    } else {
      at.source = *code.source;
      const auto parsed = script::parse(at.source);
      std::optional<script::MacroAction> macro;
      if (!parsed.ok()) {
        at.diagnostic = parsed.diagnostic().format();
      } else if (sub_action.placement == Placement::kMacro) {
        try {
          macro = script::compile_macro(sub_action.description, parsed.ast());
        } catch (const script::DslError& e) {
          at.diagnostic = e.diagnostic().format();
        }
      }
      if (!at.diagnostic.empty()) {
        at.execution_error = at.diagnostic;
      } else {
        std::string first_failure;
        for (const auto seed : probes.seeds) {
          auto run = run_probe(sub_action, parsed.ast(), macro, probes, seed, critic);
          run.critique.round = options.round;
          ++at.probes;
          if (run.critique.verdict == Verdict::kSuccess) {
            ++at.probe_successes;
          } else if (first_failure.empty()) {
            first_failure = run.critique.rationale;
            if (run.outcome.status == script::ScriptStatus::kRuntimeFault ||
                run.outcome.status == script::ScriptStatus::kStepCapExhausted) {
              at.execution_error = std::string(script::status_name(run.outcome.status)) + ": " + run.outcome.detail;
            }
          }
          at.critiques.push_back(std::move(run.critique));
        }
        if (2 * at.probe_successes > at.probes) {
          at.verdict = Verdict::kSuccess;
          result.verdict = Verdict::kSuccess;
          result.accepted = parsed.ast();
          result.accepted_source = at.source;
          result.critique = {options.round, sub_action.description, Verdict::kSuccess,
                             std::to_string(at.probe_successes) + "/" + std::to_string(at.probes) +
                                 " probes passed; " + at.critiques.front().rationale,
                             at.critiques.front().obs_before, at.critiques.front().obs_after};
          result.attempts.push_back(std::move(at));
          return result;
        }
        req.critique = std::to_string(at.probe_successes) + "/" + std::to_string(at.probes) + " probes passed; " + first_failure;
      }
    }
    req.last_code = at.source;
    req.execution_error = at.execution_error;
    if (at.probes == 0) req.critique.clear();
    result.attempts.push_back(std::move(at));
  }
  const auto& last = result.attempts.back();
  std::string why = last.diagnostic.empty() ? (last.execution_error.empty() ? req.critique : last.execution_error) : last.diagnostic;
  result.verdict = Verdict::kTooHardToCode;
  result.critique = {options.round, sub_action.description, Verdict::kTooHardToCode,
                     "no attempt passed after " + std::to_string(options.max_attempts) + " tries; last: " + why,
                     last.critiques.empty() ? "" : last.critiques.front().obs_before,
                     last.critiques.empty() ? "" : last.critiques.front().obs_after};
  return result;
}

}  // namespace hcraft::agents
