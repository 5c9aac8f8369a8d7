#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "hcraft/common/errors.hpp"
#include "hcraft/harness/config.hpp"
#include "hcraft/harness/runner.hpp"

namespace fs = std::filesystem;
using namespace hcraft;
using nlohmann::json;

namespace {

const fs::path kData = fs::path(HCRAFT_DATA_DIR) / "minicraft.jsonl";
const fs::path kAgents = fs::path(HCRAFT_FIXTURE_DIR) / "agents";

class TempDir {
 public:
  TempDir() {
    static int n = 0;
    path_ = fs::temp_directory_path() / ("hcraft_harness_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_text(const fs::path& fixture, const fs::path& out, int rounds, const std::string& seeds,
                        const std::string& extra_agents = "") {
  return "[run]\nid = r\ntask = HarvestLog\ndata = " + kData.string() + "\noutput_dir = " + out.string() +
         "\nseeds = " + seeds + "\n[agents]\nmax_rounds = " + std::to_string(rounds) +
         "\nsuccess_threshold = 0.8\n" + extra_agents + "[backend]\nkind = scripted\nfixture = " + fixture.string() +
         "\n";
}

harness::RunConfig config(const fs::path& fixture, const fs::path& out, int rounds = 3, const std::string& seeds = "1",
                          const std::string& extra_agents = "") {
  return harness::parse_config(config_text(fixture, out, rounds, seeds, extra_agents), out);
}

std::vector<json> read_lines(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::vector<json> events_without_time(const fs::path& p) {
  auto lines = read_lines(p);
  for (auto& l : lines) l.erase("t");
  return lines;
}

}  // namespace

TEST(Config, CanonicalExampleValidates) {
  const auto cfg = harness::load_config(fs::path(HCRAFT_CONFIG_DIR) / "harvest_log.ini");
  EXPECT_NO_THROW(harness::validate(cfg));
  EXPECT_EQ(cfg.task_id, "HarvestLog");
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(cfg.backend.kind, "scripted");
  EXPECT_TRUE(fs::exists(cfg.backend.fixture));
  EXPECT_TRUE(cfg.data_file.is_absolute());
  EXPECT_DOUBLE_EQ(cfg.agents.success_threshold, 0.8);
  EXPECT_EQ(cfg.agents.rl_frames, 150000);
  EXPECT_EQ(cfg.variants, harness::known_variants());
}

TEST(Config, RenderRoundTrip) {
  auto cfg = harness::load_config(fs::path(HCRAFT_CONFIG_DIR) / "harvest_log.ini");
  cfg.agents.rl.hyper.entropy_coef = 0.0123456789;
  cfg.agents.rl.reward.distance_enabled = true;
  cfg.agents.planning_tips = false;
  cfg.variants = {"iter-2"};
  const auto text = harness::render_config(cfg);
  const auto back = harness::parse_config(text, "/");
  EXPECT_EQ(harness::render_config(back), text);
  EXPECT_DOUBLE_EQ(back.agents.rl.hyper.entropy_coef, 0.0123456789);
  EXPECT_TRUE(back.agents.rl.reward.distance_enabled);
  EXPECT_FALSE(back.agents.planning_tips);
  EXPECT_EQ(back.backend.fixture, cfg.backend.fixture);
}

TEST(Config, ParseErrors) {
  const std::string base = "[run]\ntask = HarvestLog\n";
  const std::vector<std::pair<std::string, std::string>> cases = {
      {base + "colour = blue\n", "unknown key 'colour' in [run]"},
      {base + "[gpu]\nn = 1\n", "unknown section [gpu]"},
      {base + "[agents]\nmax_rounds = three\n", "max_rounds = 'three'"},
      {base + "[agents]\ncode_only = maybe\n", "code_only"},
      {base + "seeds = 1, x\n", "seeds"},
      {"[run\ntask = x\n", "cfg:1"},
  };
  for (const auto& [text, needle] : cases) {
    try {
      harness::parse_config(text, "/", "cfg");
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  }
}

TEST(Config, ValidationErrors) {
  TempDir tmp;
  const auto good = config(kAgents / "harvest_log_rounds.json", tmp.path());
  EXPECT_NO_THROW(harness::validate(good));
  auto expect_rejected = [](harness::RunConfig c, const std::string& needle) {
    try {
      harness::validate(c);
      ADD_FAILURE() << "accepted config expected to fail on " << needle;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  auto c = good;
  c.seeds.clear();
  expect_rejected(c, "seeds");
  c = good;
  c.seeds = {3, 3};
  expect_rejected(c, "distinct");
  c = good;
  c.task_id = "DigToChina";
  expect_rejected(c, "DigToChina");
  c = good;
  c.backend.fixture = tmp.path() / "missing.json";
  expect_rejected(c, "missing.json");
  c = good;
  c.variants = {"iter-9"};
  expect_rejected(c, "iter-9");
  c = good;
  c.agents.success_threshold = 1.5;
  expect_rejected(c, "success_threshold");
  c = good;
  c.agents.rl_frames = 10;
  expect_rejected(c, "frames");
  c = good;
  c.run_id = "../escape";
  expect_rejected(c, "id");
  c = good;
  c.backend.kind = "http";
  c.backend.endpoint = "https://example.invalid/v1/chat/completions";
  c.backend.model = "m";
  c.backend.key_env = "HCRAFT_TEST_SURELY_UNSET_KEY";
  expect_rejected(c, "HCRAFT_TEST_SURELY_UNSET_KEY");
}

TEST(Run, MissingFixtureLeavesNoDirectory) {
  TempDir tmp;
  const auto out = tmp.path() / "runs";
  const auto cfg = config(tmp.path() / "nope.json", out);
  EXPECT_THROW(harness::cmd_run(cfg, false), ConfigError);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Run, SolvesHarvestLogAndEveryNumberIsInTheLog) {
  TempDir tmp;
  const auto cfg = config(kAgents / "harvest_log_rounds.json", tmp.path());
  const auto summary = harness::cmd_run(cfg, false);
  EXPECT_EQ(summary.exit_code, harness::kExitSolved);
  ASSERT_EQ(summary.seeds.size(), 1u);
  EXPECT_GE(summary.seeds[0].final_success, 0.8);

  const auto dir = tmp.path() / "r";
  for (const char* f : {"config.ini", "summary.json", "summary.txt", "seed-1/events.jsonl", "seed-1/checkpoint.json",
                        "seed-1/report.json", "round-1/slow_prompt.txt", "round-1/plan.txt", "round-3/policy.ckpt",
                        "round-3/rl_metrics.jsonl", "round-2/critiques.txt"}) {
    const auto p = std::string(f).rfind("round-", 0) == 0 ? dir / "seed-1" / f : dir / f;
    EXPECT_TRUE(fs::exists(p)) << p;
  }
  EXPECT_TRUE(fs::exists(dir / "seed-1" / "round-1" / "sub-0-attempt-1.hcs"));
  EXPECT_EQ(slurp(dir / "config.ini"), harness::render_config(cfg));

  const auto events = read_lines(dir / "seed-1" / "events.jsonl");
  const auto report = json::parse(slurp(dir / "seed-1" / "report.json"));
  const auto summary_doc = json::parse(slurp(dir / "summary.json"));
  const auto& end = events.back();
  EXPECT_EQ(end["event"], "run_end");
  EXPECT_DOUBLE_EQ(end["final_success"].get<double>(), report["final_success"].get<double>());
  EXPECT_EQ(end["rl_frames"].get<long>(), report["total_rl_frames"].get<long>());
  EXPECT_DOUBLE_EQ(summary_doc["seeds"][0]["final_success"].get<double>(), report["final_success"].get<double>());
  EXPECT_DOUBLE_EQ(summary_doc["mean_success"].get<double>(), report["final_success"].get<double>());
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i]["seq"].get<std::size_t>(), i);
    EXPECT_TRUE(events[i].contains("t"));
  }
  // per-round success in the report comes from round_end lines
  std::vector<double> from_log;
  for (const auto& e : events) {
    if (e["event"] == "round_end") from_log.push_back(e["success"].get<double>());
  }
  ASSERT_EQ(from_log.size(), report["rounds"].size());
  for (std::size_t i = 0; i < from_log.size(); ++i) EXPECT_DOUBLE_EQ(from_log[i], report["rounds"][i]["success"]);
}

TEST(Run, SameConfigTwiceGivesIdenticalEventLogs) {
  TempDir a, b;
  harness::cmd_run(config(kAgents / "harvest_log_rounds.json", a.path(), 3, "1, 2"), false);
  harness::cmd_run(config(kAgents / "harvest_log_rounds.json", b.path(), 3, "1, 2"), false);
  for (const char* seed : {"seed-1", "seed-2"}) {
    const auto ea = events_without_time(a.path() / "r" / seed / "events.jsonl");
    const auto eb = events_without_time(b.path() / "r" / seed / "events.jsonl");
    ASSERT_FALSE(ea.empty());
    EXPECT_EQ(ea, eb) << seed;
  }
}

TEST(Run, ExistingRunDirectoryIsRefused) {
  TempDir tmp;
  fs::create_directories(tmp.path() / "r");
  EXPECT_THROW(harness::cmd_run(config(kAgents / "harvest_log_rounds.json", tmp.path()), false), ConfigError);
  EXPECT_THROW(harness::cmd_run(config(kAgents / "harvest_log_rounds.json", tmp.path() / "other"), true), ConfigError);
}

TEST(Run, ExitCodesSeparateBudgetFromHalt) {
  TempDir tmp;
  const auto budget = harness::cmd_run(config(kAgents / "failing_plan.json", tmp.path() / "a", 1), false);
  EXPECT_EQ(budget.exit_code, harness::kExitBudgetExhausted);
  EXPECT_EQ(budget.seeds[0].status, agents::RunStatus::kBudgetExhausted);
  const auto halted = harness::cmd_run(config(kAgents / "malformed_plan.json", tmp.path() / "b", 2), false);
  EXPECT_EQ(halted.exit_code, harness::kExitHalted);
  EXPECT_EQ(halted.seeds[0].status, agents::RunStatus::kParseFailure);
}

TEST(Run, ResumeAfterOutageMatchesUninterruptedRun) {
  TempDir ref, tmp;
  const auto full = kAgents / "harvest_log_rounds.json";
  harness::cmd_run(config(full, ref.path(), 3, "1, 2"), false);

  // the replacement fixture has no answer for round 3, so the run stops there
  auto doc = json::parse(slurp(full));
  for (auto& rule : doc["rules"]) {
    if (rule["when"] == json::array({"Round: 3"})) rule["when"].push_back("<unreachable>");
  }
  const auto fixture = tmp.path() / "fixture.json";
  std::ofstream(fixture) << doc.dump();
  const auto cfg = config(fixture, tmp.path(), 3, "1, 2");
  const auto first = harness::cmd_run(cfg, false);
  EXPECT_EQ(first.exit_code, harness::kExitHalted);
  EXPECT_EQ(first.seeds[0].status, agents::RunStatus::kInterrupted);
  EXPECT_EQ(first.seeds[0].rounds, 2);

  std::ofstream(fixture) << slurp(full);
  const auto second = harness::cmd_run(cfg, true);
  EXPECT_EQ(second.exit_code, harness::kExitSolved);
  for (const char* seed : {"seed-1", "seed-2"}) {
    EXPECT_EQ(events_without_time(tmp.path() / "r" / seed / "events.jsonl"),
              events_without_time(ref.path() / "r" / seed / "events.jsonl"))
        << seed;
    auto ra = json::parse(slurp(tmp.path() / "r" / seed / "report.json"));
    auto rb = json::parse(slurp(ref.path() / "r" / seed / "report.json"));
    ra.erase("wall_seconds");
    rb.erase("wall_seconds");
    EXPECT_EQ(ra, rb) << seed;
  }
}

TEST(Run, ResumeKeepsFinishedSeedsAndRejectsChangedConfig) {
  TempDir tmp;
  const auto cfg = config(kAgents / "harvest_log_rounds.json", tmp.path());
  harness::cmd_run(cfg, false);
  const auto events = slurp(tmp.path() / "r" / "seed-1" / "events.jsonl");
  const auto again = harness::cmd_run(cfg, true);
  EXPECT_EQ(again.exit_code, harness::kExitSolved);
  EXPECT_EQ(slurp(tmp.path() / "r" / "seed-1" / "events.jsonl"), events);
  auto changed = cfg;
  changed.agents.max_rounds = 5;
  EXPECT_THROW(harness::cmd_run(changed, true), ConfigError);
}

TEST(Ablate, SingleVariantGivesOneRow) {
  TempDir tmp;
  auto cfg = config(kAgents / "harvest_log_rounds.json", tmp.path(), 3, "1, 2");
  cfg.variants = {"zero-shot"};
  const auto rows = harness::cmd_ablate(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].per_seed.size(), 2u);
  const auto table = slurp(tmp.path() / "r-ablate" / "ablation.txt");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
  EXPECT_EQ(table, harness::format_ablation(rows, cfg.seeds));
}

TEST(Ablate, TotalsEqualPerRunReports) {
  TempDir tmp;
  auto cfg = config(kAgents / "harvest_log_rounds.json", tmp.path(), 3, "1, 2");
  cfg.variants = {"zero-shot", "iter-2", "iter-2-no-sp"};
  const auto rows = harness::cmd_ablate(cfg);
  const auto root = tmp.path() / "r-ablate";
  const auto records = read_lines(root / "ablation.jsonl");
  std::size_t k = 0;
  for (const auto& row : rows) {
    double sum = 0.0;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      const auto report =
          json::parse(slurp(root / row.variant / ("seed-" + std::to_string(cfg.seeds[s])) / "report.json"));
      const double from_report = report["final_success"].get<double>();
      EXPECT_DOUBLE_EQ(row.per_seed[s], from_report) << row.variant;
      // the last round decides a run
      EXPECT_DOUBLE_EQ(from_report, report["rounds"].back()["success"].get<double>());
      EXPECT_DOUBLE_EQ(records[k++]["success"].get<double>(), from_report);
      sum += from_report;
    }
    EXPECT_DOUBLE_EQ(records[k++]["mean"].get<double>(), row.mean);
    EXPECT_NEAR(row.mean, sum / 2.0, 1e-12);
  }
  EXPECT_EQ(k, records.size());
  for (const auto& r : read_lines(root / "zero-shot" / "seed-1" / "events.jsonl")) {
    if (r["event"] == "round_start") {
      EXPECT_EQ(r["round"], 1);
    }
  }
}

TEST(Ablate, UnknownVariantIsAConfigError) {
  TempDir tmp;
  auto cfg = config(kAgents / "harvest_log_rounds.json", tmp.path());
  cfg.variants = {"pure-magic"};
  EXPECT_THROW(harness::cmd_ablate(cfg), ConfigError);
  EXPECT_FALSE(fs::exists(tmp.path() / "r-ablate"));
}

TEST(Curves, AlignKeepsLatestEvaluationAndMarksGaps) {
  harness::Curve c;
  c.points = {{900, std::nullopt}, {1800, 0.1}, {2700, std::nullopt}, {3600, 0.4}, {4500, std::nullopt}};
  const auto out = harness::align(c, 1000);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_FALSE(out[0].success);
  EXPECT_DOUBLE_EQ(*out[1].success, 0.1);
  EXPECT_DOUBLE_EQ(*out[2].success, 0.1);
  EXPECT_DOUBLE_EQ(*out[3].success, 0.4);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].frames, 1000 * static_cast<long>(i + 1));
  EXPECT_TRUE(harness::align(harness::Curve{}, 1000).empty());
  EXPECT_THROW(harness::align(c, 0), ContractViolation);

  const auto lines = harness::curve_lines(c, out);
  const auto first = json::parse(lines.substr(0, lines.find('\n')));
  EXPECT_TRUE(first["gap"].get<bool>());
  EXPECT_TRUE(first["eval_success"].is_null());
}

TEST(Curves, ReadFromRunDirectory) {
  TempDir tmp;
  harness::cmd_run(config(kAgents / "harvest_log_rounds.json", tmp.path()), false);
  const auto dir = tmp.path() / "r";
  const auto curves = harness::read_curves(dir);
  ASSERT_EQ(curves.size(), 1u);
  EXPECT_EQ(curves[0].seed, 1u);
  EXPECT_EQ(curves[0].round, 3);
  ASSERT_FALSE(curves[0].points.empty());
  for (std::size_t i = 1; i < curves[0].points.size(); ++i) {
    EXPECT_GT(curves[0].points[i].frames, curves[0].points[i - 1].frames);
  }
  EXPECT_TRUE(std::any_of(curves[0].points.begin(), curves[0].points.end(), [](const auto& p) { return !p.success; }));
  // the same numbers as the round's metrics file
  const auto metrics = read_lines(dir / "seed-1" / "round-3" / "rl_metrics.jsonl");
  ASSERT_EQ(metrics.size(), curves[0].points.size());
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    EXPECT_EQ(metrics[i]["frames"].get<long>(), curves[0].points[i].frames);
    EXPECT_EQ(metrics[i]["eval_success"].is_null(), !curves[0].points[i].success);
  }
  const auto file = harness::cmd_curves(dir, 0);
  EXPECT_EQ(read_lines(file).size(), curves[0].points.size());
  EXPECT_THROW(harness::read_curves(tmp.path() / "missing"), ConfigError);
}
