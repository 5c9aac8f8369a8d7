#include "hcraft/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hcraft/common/errors.hpp"
#include "hcraft/nn/mlp.hpp"

namespace hcraft::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Readers never see a half-written file.
void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  write_file(tmp, text);
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::unique_ptr<agents::Backend> make_backend(const BackendConfig& b) {
  if (b.kind == "scripted") return std::make_unique<agents::ScriptedBackend>(agents::ScriptedBackend::from_file(b.fixture));
  return std::make_unique<agents::HttpBackend>(
      agents::HttpBackend::Options{b.endpoint, b.model, b.key_env, b.temperature, b.timeout_seconds, b.retries});
}

void write_round_artifacts(const fs::path& dir, const agents::RoundRecord& r) {
  const fs::path rd = dir / ("round-" + std::to_string(r.round));
  fs::create_directories(rd);
  write_file(rd / "slow_prompt.txt", r.slow_prompt);
  std::string plan = r.plan.raw;
  for (const auto& why : r.plan_rejections) plan += "\n# rejected response: " + why;
  write_file(rd / "plan.txt", plan + "\n");
  std::string crit;
  for (const auto& c : r.critiques) crit += c.format() + "\n";
  write_file(rd / "critiques.txt", crit);
  for (const auto& log : r.inner) {
    for (const auto& at : log.result.attempts) {
      std::string text = "# " + log.sub_action.description + "\n";
      if (!at.diagnostic.empty()) text += "# " + at.diagnostic + "\n";
      text += "# verdict: " + agents::verdict_name(at.verdict) + " (" + std::to_string(at.probe_successes) + "/" +
              std::to_string(at.probes) + " probes)\n" + at.source;
      write_file(rd / ("sub-" + std::to_string(log.index) + "-attempt-" + std::to_string(at.attempt) + ".hcs"), text);
    }
  }
  if (r.used_rl) {
    std::string lines;
    for (const auto& m : r.rl_metrics) {
      json j{{"iteration", m.iteration}, {"frames", m.frames}, {"episodes", m.episodes},
             {"train_success", m.train_success}, {"mean_return", m.mean_return},
             {"eval_success", std::isfinite(m.eval_success) ? json(m.eval_success) : json(nullptr)},
             {"policy_loss", m.policy_loss}, {"value_loss", m.value_loss}, {"entropy", m.entropy}};
      lines += j.dump() + "\n";
    }
    write_file(rd / "rl_metrics.jsonl", lines);
  }
}

SeedOutcome outcome_of(const agents::RunReport& r, std::uint64_t seed, double wall) {
  return {seed, r.state.status, r.final_success, r.total_rl_frames, r.state.outer_round, wall};
}

std::string seed_dir_name(std::uint64_t seed) { return "seed-" + std::to_string(seed); }

int exit_code_for(const std::vector<SeedOutcome>& seeds) {
  int code = kExitSolved;
  for (const auto& s : seeds) {
    if (s.status == agents::RunStatus::kInterrupted || s.status == agents::RunStatus::kParseFailure) return kExitHalted;
    if (s.status != agents::RunStatus::kSolved) code = kExitBudgetExhausted;
  }
  return code;
}

}  // namespace

AgentSet make_agents(const RunConfig& cfg) {
  AgentSet set;
  set.slow = make_backend(cfg.backend);
  set.fast = make_backend(cfg.backend);
  if (cfg.critic == "backend") {
    set.critic_backend = make_backend(cfg.backend);
    set.critic = std::make_unique<agents::BackendCritic>(*set.critic_backend);
  } else {
    set.critic = std::make_unique<agents::RuleCritic>();
  }
  return set;
}

SeedOutcome run_seed(const RunConfig& cfg, const agents::TwoLoopOptions& options, std::uint64_t seed, const fs::path& dir,
                     bool resume) {
  fs::create_directories(dir);
  const auto registry = std::make_shared<const env::Registry>(env::Registry::load(cfg.data_file));
  const auto& task = registry->task(cfg.task_id);
  auto set = make_agents(cfg);
  auto opts = options;
  opts.seed = seed;

  json checkpoint;
  const json* resume_from = nullptr;
  if (resume && fs::exists(dir / "report.json")) {
    const auto doc = read_json(dir / "report.json");
    const auto report = agents::report_from_json(doc);
    if (report.state.status != agents::RunStatus::kInterrupted) {
      return outcome_of(report, seed, doc.value("wall_seconds", 0.0));
    }
  }
  if (resume && fs::exists(dir / "checkpoint.json")) {
    checkpoint = read_json(dir / "checkpoint.json");
    resume_from = &checkpoint;
  }

  std::ofstream events(dir / "events.jsonl", std::ios::trunc);
  std::size_t seq = 0;
  if (resume_from != nullptr) {
    for (const auto& e : checkpoint.at("events")) {
      const agents::Event ev{e.at("event").get<std::string>(), e.at("round").get<int>(), e.at("data")};
      events << agents::event_line(ev, seq++, true) << "\n";
    }
    events.flush();
  }
  agents::RunHooks hooks;
  hooks.on_event = [&](const agents::Event& e) {
    events << agents::event_line(e, seq++, true) << "\n";
    events.flush();
    if (e.kind == "round_end" || e.kind == "run_end" || e.kind == "backend_error") {
      spdlog::info("seed {} {} round {} {}", seed, e.kind, e.round, e.data.dump());
    }
  };
  hooks.on_checkpoint = [&](const json& cp) { write_atomic(dir / "checkpoint.json", cp.dump()); };
  hooks.on_policy = [&](int round, const ppo::TrainResult& trained) {
    const fs::path rd = dir / ("round-" + std::to_string(round));
    fs::create_directories(rd);
    nn::save_checkpoint(rd / "policy.ckpt", trained.best->net(), trained.best_optimizer);
  };

  const auto start = std::chrono::steady_clock::now();
  const auto report = agents::two_loop(task, registry, set.view(), opts, hooks, resume_from);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  for (const auto& r : report.state.rounds) write_round_artifacts(dir, r);
  auto doc = agents::to_json(report);
  doc["seed"] = seed;
  doc["wall_seconds"] = wall;
  write_atomic(dir / "report.json", doc.dump(2));
  return outcome_of(report, seed, wall);
}

RunSummary cmd_run(const RunConfig& cfg, bool resume) {
  validate(cfg);
  RunSummary summary;
  summary.run_id = cfg.run_id;
  summary.dir = cfg.output_dir / cfg.run_id;
  const std::string snapshot = render_config(cfg);
  fs::create_directories(cfg.output_dir);
  if (resume) {
    if (!fs::is_directory(summary.dir)) throw ConfigError("no run to resume at " + summary.dir.string());
    std::ifstream in(summary.dir / "config.ini");
    std::stringstream old;
    old << in.rdbuf();
    if (old.str() != snapshot) throw ConfigError("config differs from the one the run was started with");
  } else {
    if (!fs::create_directory(summary.dir)) {
      throw ConfigError("run directory " + summary.dir.string() + " already exists; use --resume or another run id");
    }
    write_file(summary.dir / "config.ini", snapshot);
  }

  for (const auto seed : cfg.seeds) {
    spdlog::info("run {} task {} seed {}", cfg.run_id, cfg.task_id, seed);
    summary.seeds.push_back(run_seed(cfg, cfg.agents, seed, summary.dir / seed_dir_name(seed), resume));
  }
  double total = 0.0;
  for (const auto& s : summary.seeds) total += s.final_success;
  summary.mean_success = total / static_cast<double>(summary.seeds.size());
  summary.exit_code = exit_code_for(summary.seeds);

  json seeds = json::array();
  std::ostringstream text;
  text << "run " << cfg.run_id << " task " << cfg.task_id << "\n";
  for (const auto& s : summary.seeds) {
    seeds.push_back({{"seed", s.seed}, {"status", agents::status_name(s.status)}, {"final_success", s.final_success},
                     {"rl_frames", s.rl_frames}, {"rounds", s.rounds}, {"wall_seconds", s.wall_seconds},
                     {"events", seed_dir_name(s.seed) + "/events.jsonl"}});
    text << "seed " << s.seed << "  " << agents::status_name(s.status) << "  success " << std::fixed
         << std::setprecision(3) << s.final_success << "  rounds " << s.rounds << "  rl_frames " << s.rl_frames
         << "  wall " << std::setprecision(1) << s.wall_seconds << "s\n";
  }
  text << "mean success " << std::setprecision(3) << summary.mean_success << "\nexit code " << summary.exit_code << "\n";
  write_atomic(summary.dir / "summary.json", json{{"run_id", cfg.run_id},
                                                  {"task", cfg.task_id},
                                                  {"seeds", seeds},
                                                  {"mean_success", summary.mean_success},
                                                  {"exit_code", summary.exit_code}}
                                                 .dump(2));
  write_atomic(summary.dir / "summary.txt", text.str());
  return summary;
}

namespace {

double pure_rl_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  const auto registry = std::make_shared<const env::Registry>(env::Registry::load(cfg.data_file));
  const auto& task = registry->task(cfg.task_id);
  auto rl = cfg.agents.rl;
  rl.task_id = task.task_id;
  rl.task = task;
  rl.seed = seed;
  rl.eval_episodes = cfg.agents.eval_episodes;
  const auto trained = ppo::train(rl, registry, cfg.agents.rl_frames);
  json frames = json::array(), eval = json::array();
  for (const auto& m : trained.metrics) {
    frames.push_back(m.frames);
    eval.push_back(std::isfinite(m.eval_success) ? json(m.eval_success) : json(nullptr));
  }
  const bool solved = trained.final_success >= cfg.agents.success_threshold;
  const std::vector<agents::Event> events = {
      {"run_start", 0, {{"task", task.task_id}, {"seed", seed}, {"variant", "pure-rl"}}},
      {"rl_training", 1,
       {{"macros", 0}, {"prefix_scripts", 0}, {"frames", trained.frames_used}, {"iterations", trained.metrics.size()},
        {"best_eval_success", trained.best_eval_success}, {"success", trained.final_success},
        {"episodes", rl.eval_episodes}, {"curve_frames", frames}, {"curve_eval_success", eval}}},
      {"run_end", 1,
       {{"status", agents::status_name(solved ? agents::RunStatus::kSolved : agents::RunStatus::kBudgetExhausted)},
        {"final_success", trained.final_success}, {"rounds", 1}, {"rl_frames", trained.frames_used}}}};
  std::string lines;
  for (std::size_t i = 0; i < events.size(); ++i) lines += agents::event_line(events[i], i, true) + "\n";
  write_file(dir / "events.jsonl", lines);
  write_atomic(dir / "report.json", json{{"variant", "pure-rl"},
                                         {"seed", seed},
                                         {"final_success", trained.final_success},
                                         {"total_rl_frames", trained.frames_used}}
                                        .dump(2));
  return trained.final_success;
}

}  // namespace

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg) {
  validate(cfg);
  const auto variants = cfg.variants.empty() ? known_variants() : cfg.variants;
  const fs::path root = cfg.output_dir / (cfg.run_id + "-ablate");
  fs::create_directories(root);
  write_file(root / "config.ini", render_config(cfg));

  std::vector<AblationRow> rows;
  std::string records;
  for (const auto& v : variants) {
    AblationRow row{v, {}, 0.0};
    for (const auto seed : cfg.seeds) {
      const fs::path dir = root / v / seed_dir_name(seed);
      fs::remove_all(dir);
      spdlog::info("ablate {} seed {}", v, seed);
      double success = 0.0;
      if (v == "pure-rl") {
        success = pure_rl_seed(cfg, seed, dir);
      } else {
        auto opts = cfg.agents;
        if (v == "pure-code") opts.code_only = true;
        else if (v == "zero-shot") opts.max_rounds = 1;
        else if (v == "iter-2") opts.max_rounds = 2;
        else if (v == "iter-2-no-sp") opts.max_rounds = 2, opts.planning_tips = false;
        else if (v == "iter-3") opts.max_rounds = 3;
        success = run_seed(cfg, opts, seed, dir, false).final_success;
      }
      row.per_seed.push_back(success);
      records += json{{"variant", v}, {"seed", seed}, {"success", success},
                      {"report", v + "/" + seed_dir_name(seed) + "/report.json"}}
                     .dump() +
                 "\n";
    }
    row.mean = std::accumulate(row.per_seed.begin(), row.per_seed.end(), 0.0) / static_cast<double>(row.per_seed.size());
    records += json{{"variant", v}, {"mean", row.mean}}.dump() + "\n";
    rows.push_back(std::move(row));
  }
  write_atomic(root / "ablation.jsonl", records);
  write_atomic(root / "ablation.txt", format_ablation(rows, cfg.seeds));
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows, const std::vector<std::uint64_t>& seeds) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "variant";
  for (const auto s : seeds) os << std::right << std::setw(9) << ("seed " + std::to_string(s));
  os << std::setw(9) << "mean" << "\n";
  os << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    os << std::left << std::setw(14) << r.variant << std::right;
    for (const auto v : r.per_seed) os << std::setw(9) << v;
    os << std::setw(9) << r.mean << "\n";
  }
  return os.str();
}

std::vector<Curve> read_curves(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("no run directory at " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "events.jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Curve> curves;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::uint64_t seed = 0;
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error&) {
        continue;  // a torn last line of an interrupted run
      }
      const auto kind = j.value("event", "");
      if (kind == "run_start") seed = j.value("seed", std::uint64_t{0});
      if (kind != "rl_training") continue;
      Curve c;
      c.source = fs::relative(file, dir).string();
      c.seed = seed;
      c.round = j.value("round", 0);
      const auto& frames = j.at("curve_frames");
      const auto& eval = j.at("curve_eval_success");
      for (std::size_t i = 0; i < frames.size(); ++i) {
        CurvePoint p{frames[i].get<long>(), std::nullopt};
        if (i < eval.size() && eval[i].is_number()) p.success = eval[i].get<double>();
        c.points.push_back(p);
      }
      curves.push_back(std::move(c));
    }
  }
  return curves;
}

std::vector<CurvePoint> align(const Curve& curve, long grid) {
  if (grid <= 0) throw ContractViolation("grid spacing must be positive");
  std::vector<CurvePoint> out;
  if (curve.points.empty()) return out;
  const long last = curve.points.back().frames;
  std::size_t k = 0;
  std::optional<double> latest;
  for (long g = grid; g <= last; g += grid) {
    while (k < curve.points.size() && curve.points[k].frames <= g) {
      if (curve.points[k].success) latest = curve.points[k].success;
      ++k;
    }
    out.push_back({g, latest});
  }
  return out;
}

std::string curve_lines(const Curve& curve, const std::vector<CurvePoint>& points) {
  std::string out;
  for (const auto& p : points) {
    nlohmann::ordered_json j;
    j["source"] = curve.source;
    j["seed"] = curve.seed;
    j["round"] = curve.round;
    j["frames"] = p.frames;
    j["eval_success"] = p.success ? json(*p.success) : json(nullptr);
    j["gap"] = !p.success.has_value();
    out += j.dump() + "\n";
  }
  return out;
}

fs::path cmd_curves(const fs::path& run_dir, long grid) {
  std::string out;
  for (const auto& c : read_curves(run_dir)) out += curve_lines(c, grid > 0 ? align(c, grid) : c.points);
  const fs::path file = run_dir / "curves.jsonl";
  write_atomic(file, out);
  return file;
}

}  // namespace hcraft::harness
